#include "moeagg/trace.hpp"

#include <string>
#include <utility>

#include "json.hpp"

namespace moeagg {

namespace {

using nlohmann::json;

json state_to_json(const AgentState& state) {
    return json::array({state.x, state.y, state.theta});
}

AgentState state_from_json(const json& node, const char* field) {
    if (!node.is_array() || node.size() != 3)
        throw std::runtime_error(std::string("field '") + field + "' must be [x, y, theta]");
    return AgentState(node[0].get<double>(), node[1].get<double>(), node[2].get<double>());
}

std::vector<AgentState> states_from_json(const json& node, const char* field) {
    if (!node.is_array() || node.empty())
        throw std::runtime_error(std::string("field '") + field + "' must be a nonempty array");
    std::vector<AgentState> states;
    states.reserve(node.size());
    for (const auto& entry : node) states.push_back(state_from_json(entry, field));
    return states;
}

json expert_to_json(const std::variant<ExpertPrediction, SampleSet>& expert) {
    if (const auto* gmm = std::get_if<ExpertPrediction>(&expert)) {
        json modes = json::array();
        for (const auto& mode : gmm->modes) {
            json mean = json::array();
            json prec = json::array();
            for (std::size_t step = 0; step < mode.horizon(); ++step) {
                mean.push_back(state_to_json(mode.mean[step]));
                prec.push_back(json::array({mode.precision[step][0], mode.precision[step][1],
                                            mode.precision[step][2]}));
            }
            modes.push_back({{"p", mode.weight}, {"mean", mean}, {"prec", prec}});
        }
        return json{{"gmm", {{"modes", modes}}}};
    }
    const auto& samples = std::get<SampleSet>(expert);
    json trajectories = json::array();
    for (const auto& trajectory : samples.samples) {
        json states = json::array();
        for (const auto& state : trajectory) states.push_back(state_to_json(state));
        trajectories.push_back(states);
    }
    return json{{"samples", trajectories}};
}

std::variant<ExpertPrediction, SampleSet> expert_from_json(const json& node,
                                                           std::size_t expert_index) {
    const std::string id = "expert_" + std::to_string(expert_index);
    if (node.contains("gmm")) {
        const json& gmm = node.at("gmm");
        if (!gmm.contains("modes") || !gmm.at("modes").is_array())
            throw std::runtime_error("field 'gmm.modes' must be an array");
        std::vector<GaussianMode> modes;
        for (const auto& mode_node : gmm.at("modes")) {
            std::vector<AgentState> mean = states_from_json(mode_node.at("mean"), "mean");
            const json& prec_node = mode_node.at("prec");
            if (!prec_node.is_array() || prec_node.size() != mean.size())
                throw std::runtime_error("field 'prec' must match 'mean' length");
            std::vector<std::array<double, 3>> precision;
            precision.reserve(prec_node.size());
            for (const auto& entry : prec_node) {
                if (!entry.is_array() || entry.size() != 3)
                    throw std::runtime_error("field 'prec' entries must be [hx, hy, htheta]");
                precision.push_back({entry[0].get<double>(), entry[1].get<double>(),
                                     entry[2].get<double>()});
            }
            modes.emplace_back(std::move(mean), std::move(precision),
                               mode_node.at("p").get<double>());
        }
        return ExpertPrediction(std::move(modes), id);
    }
    if (node.contains("samples")) {
        std::vector<std::vector<AgentState>> trajectories;
        for (const auto& trajectory_node : node.at("samples"))
            trajectories.push_back(states_from_json(trajectory_node, "samples"));
        return SampleSet(std::move(trajectories));
    }
    throw std::runtime_error("field 'experts' entries must contain 'gmm' or 'samples'");
}

}  // namespace

TraceError::TraceError(std::size_t line, const std::string& message)
    : std::runtime_error("trace line " + std::to_string(line) + ": " + message), line_(line) {}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) throw TraceError(0, "cannot open '" + path.string() + "' for writing");
}

void TraceWriter::write(const StepRecord& record) {
    json doc;
    doc["t"] = record.t;
    doc["truth"] = state_to_json(record.truth);
    json future = json::array();
    for (const auto& state : record.future.states) future.push_back(state_to_json(state));
    doc["future"] = future;
    json experts = json::array();
    for (const auto& expert : record.experts) experts.push_back(expert_to_json(expert));
    doc["experts"] = experts;
    out_ << doc.dump() << '\n';
    if (!out_) throw TraceError(0, "write failed on '" + path_.string() + "'");
}

TraceReader::TraceReader(const std::filesystem::path& path) : in_(path), path_(path) {
    if (!in_) throw TraceError(0, "cannot open '" + path.string() + "' for reading");
}

TraceReader replay_trace(const std::filesystem::path& path) { return TraceReader(path); }

std::optional<StepRecord> TraceReader::next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    if (line.empty()) return next();  // tolerate blank lines between records

    StepRecord record;
    try {
        const json doc = json::parse(line);
        record.t = doc.at("t").get<std::size_t>();
        record.truth = state_from_json(doc.at("truth"), "truth");
        record.future.states = states_from_json(doc.at("future"), "future");
        const json& experts = doc.at("experts");
        if (!experts.is_array() || experts.empty())
            throw std::runtime_error("field 'experts' must be a nonempty array");
        for (std::size_t i = 0; i < experts.size(); ++i)
            record.experts.push_back(expert_from_json(experts[i], i));
    } catch (const TraceError&) {
        throw;
    } catch (const std::exception& error) {
        throw TraceError(line_, error.what());
    }

    // Cross-record consistency: expert count, horizon and per-expert kind are
    // fixed by the first record.
    ++records_;
    const std::size_t horizon = record.future.states.size();
    for (std::size_t i = 0; i < record.experts.size(); ++i) {
        const std::size_t expert_horizon =
            std::holds_alternative<ExpertPrediction>(record.experts[i])
                ? std::get<ExpertPrediction>(record.experts[i]).horizon()
                : std::get<SampleSet>(record.experts[i]).horizon();
        if (expert_horizon != horizon)
            throw TraceError(line_, "step " + std::to_string(records_) +
                                        ": expert horizon differs from 'future' length");
    }
    if (records_ == 1) {
        n_experts_ = record.experts.size();
        horizon_ = horizon;
        for (const auto& expert : record.experts)
            expert_is_gmm_.push_back(std::holds_alternative<ExpertPrediction>(expert));
    } else {
        if (record.experts.size() != n_experts_)
            throw TraceError(line_, "step " + std::to_string(records_) +
                                        ": expert count changed mid-trace");
        if (horizon != horizon_)
            throw TraceError(line_, "step " + std::to_string(records_) +
                                        ": horizon differs from step 1");
        for (std::size_t i = 0; i < record.experts.size(); ++i) {
            if (std::holds_alternative<ExpertPrediction>(record.experts[i]) != expert_is_gmm_[i])
                throw TraceError(line_, "step " + std::to_string(records_) +
                                            ": expert output kind changed mid-trace");
        }
    }
    return record;
}

TraceSummary validate_trace(const std::filesystem::path& path) {
    TraceReader reader(path);
    TraceSummary summary;
    while (auto record = reader.next()) {
        if (summary.steps == 0) {
            summary.n_experts = record->experts.size();
            summary.horizon = record->future.states.size();
            for (const auto& expert : record->experts) {
                if (summary.n_modes == 0) {
                    if (const auto* gmm = std::get_if<ExpertPrediction>(&expert))
                        summary.n_modes = gmm->n_modes();
                }
                if (summary.samples_per_expert == 0) {
                    if (const auto* samples = std::get_if<SampleSet>(&expert))
                        summary.samples_per_expert = samples->n_samples();
                }
            }
        }
        ++summary.steps;
    }
    return summary;
}

}  // namespace moeagg
