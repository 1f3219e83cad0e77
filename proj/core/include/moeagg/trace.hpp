/**
 * @file trace.hpp
 * @brief Line-delimited JSON trace files: one StepRecord per line.
 *
 * The trace format is the integration seam for replaying recorded expert
 * streams. Each line holds `t`, `truth` ([x,y,theta]), `future` (K states)
 * and `experts`, an array of N objects that are either
 * {"gmm": {"modes": [{"p", "mean", "prec"}, ...]}} or {"samples": [...]}.
 * Numbers are JSON doubles and round-trip exactly.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "moeagg/simulation.hpp"

namespace moeagg {

/// Malformed or unreadable trace; carries the 1-based line number.
class TraceError : public std::runtime_error {
  public:
    TraceError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class TraceWriter {
  public:
    explicit TraceWriter(const std::filesystem::path& path);
    void write(const StepRecord& record);

  private:
    std::ofstream out_;
    std::filesystem::path path_;
};

/// Streams records back in file order, validating per-record invariants and
/// cross-record consistency (expert count, horizon, per-expert output kind).
class TraceReader final : public StepSource {
  public:
    explicit TraceReader(const std::filesystem::path& path);
    std::optional<StepRecord> next() override;

  private:
    std::ifstream in_;
    std::filesystem::path path_;
    std::size_t line_ = 0;
    std::size_t records_ = 0;
    std::size_t n_experts_ = 0;
    std::size_t horizon_ = 0;
    std::vector<bool> expert_is_gmm_;
};

TraceReader replay_trace(const std::filesystem::path& path);

struct TraceSummary {
    std::size_t steps = 0;
    std::size_t n_experts = 0;
    std::size_t n_modes = 0;          // first GMM expert's L, 0 if none
    std::size_t horizon = 0;
    std::size_t samples_per_expert = 0;  // first sample expert's M, 0 if none
};

/// Streams through the whole file; throws TraceError on the first bad line.
TraceSummary validate_trace(const std::filesystem::path& path);

}  // namespace moeagg
