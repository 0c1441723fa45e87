#include "sharedspace/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sharedspace/errors.hpp"

namespace sharedspace {

namespace {

void append_fixed(std::string& out, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    out += buf;
}

}  // namespace

std::string trajectories_to_string(const TrajectoryLog& log) {
    std::string out;
    out.reserve(log.records.size() * 64 + 64);
    out += "agent_id,kind,time,x,y,speed,fsm_state,strategy,group_id\n";
    for (const auto& r : log.records) {
        out += std::to_string(r.agent_id);
        out += ',';
        out += to_string(r.kind);
        out += ',';
        append_fixed(out, r.time);
        out += ',';
        append_fixed(out, r.position.x);
        out += ',';
        append_fixed(out, r.position.y);
        out += ',';
        append_fixed(out, r.speed);
        out += ',';
        out += r.fsm ? to_string(*r.fsm) : "-";
        out += ',';
        out += r.strategy ? to_string(*r.strategy) : "-";
        out += ',';
        out += std::to_string(r.group_id);
        out += '\n';
    }
    return out;
}

void write_trajectories(const TrajectoryLog& log, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw ComparisonError("cannot open trajectory file for writing: " + path);
    }
    file << trajectories_to_string(log);
}

TrajectoryLog parse_trajectory_log(const std::string& text, const std::string& origin) {
    TrajectoryLog log;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ComparisonError(origin + ": empty trajectory file");
    }
    if (line.rfind("agent_id,kind,time", 0) != 0) {
        throw ComparisonError(origin + ": missing trajectory header row");
    }

    int line_no = 1;
    double prev_time = -1.0;
    bool have_dt = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 9) {
            throw ComparisonError(origin + ":" + std::to_string(line_no) +
                                  ": expected 9 columns, got " + std::to_string(fields.size()));
        }
        TickRecord r;
        try {
            r.agent_id = std::stoi(fields[0]);
            if (!parse_user_kind(fields[1], r.kind)) {
                throw ComparisonError(origin + ":" + std::to_string(line_no) +
                                      ": unknown kind '" + fields[1] + "'");
            }
            r.time = std::stod(fields[2]);
            r.position = {std::stod(fields[3]), std::stod(fields[4])};
            r.speed = std::stod(fields[5]);
        } catch (const std::invalid_argument&) {
            throw ComparisonError(origin + ":" + std::to_string(line_no) + ": malformed number");
        }
        if (fields[6] != "-") {
            FsmState fsm;
            if (parse_fsm_state(fields[6], fsm)) r.fsm = fsm;
        }
        if (fields[7] != "-") {
            Strategy s;
            if (parse_strategy(fields[7], s)) r.strategy = s;
        }
        r.group_id = std::stoi(fields[8]);
        if (!have_dt && prev_time >= 0.0 && r.time > prev_time) {
            log.dt = r.time - prev_time;
            have_dt = true;
        }
        prev_time = std::max(prev_time, r.time);
        log.records.push_back(r);
    }
    return log;
}

TrajectoryLog read_trajectory_log(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw ComparisonError("cannot open trajectory file: " + path);
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_trajectory_log(buffer.str(), path);
}

namespace {

struct Sample {
    double time;
    Vec2 position;
    double speed;
};

std::map<int, std::vector<Sample>> samples_by_agent(const TrajectoryLog& log) {
    std::map<int, std::vector<Sample>> out;
    for (const auto& r : log.records) {
        out[r.agent_id].push_back({r.time, r.position, r.speed});
    }
    for (auto& [id, samples] : out) {
        std::stable_sort(samples.begin(), samples.end(),
                         [](const Sample& a, const Sample& b) { return a.time < b.time; });
    }
    return out;
}

// Linear interpolation at time t; empty when t is outside the sample range.
std::optional<Sample> interpolate(const std::vector<Sample>& samples, double t) {
    if (samples.empty() || t < samples.front().time - 1e-9 ||
        t > samples.back().time + 1e-9) {
        return std::nullopt;
    }
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const Sample& s, double value) { return s.time < value; });
    // Exact timestamp hits bypass interpolation so identical logs compare
    // to exactly zero.
    if (it != samples.end() && std::abs(it->time - t) <= 1e-12) return *it;
    if (it == samples.begin()) return samples.front();
    if (it == samples.end()) return samples.back();
    const Sample& hi = *it;
    const Sample& lo = *(it - 1);
    const double span = hi.time - lo.time;
    if (span <= 1e-12) return lo;
    const double w = (t - lo.time) / span;
    Sample s;
    s.time = t;
    s.position = lo.position + (hi.position - lo.position) * w;
    s.speed = lo.speed + (hi.speed - lo.speed) * w;
    return s;
}

enum class Metric { Position, Speed };

DeviationStats deviation(const TrajectoryLog& sim, const TrajectoryLog& ref,
                         const std::map<int, int>& id_map, Metric metric) {
    const auto sim_samples = samples_by_agent(sim);
    const auto ref_samples = samples_by_agent(ref);

    DeviationStats stats;
    std::map<UserKind, std::pair<double, int>> kind_acc;

    std::map<int, UserKind> kinds;
    for (const auto& r : sim.records) kinds[r.agent_id] = r.kind;

    for (const auto& [sim_id, samples] : sim_samples) {
        const int ref_id = id_map.count(sim_id) ? id_map.at(sim_id) : sim_id;
        auto ref_it = ref_samples.find(ref_id);
        if (ref_it == ref_samples.end()) continue;

        double acc = 0.0;
        int count = 0;
        for (const auto& s : samples) {
            const auto r = interpolate(ref_it->second, s.time);
            if (!r) continue;
            if (metric == Metric::Position) {
                acc += distance(s.position, r->position);
            } else {
                acc += std::abs(s.speed - r->speed);
            }
            ++count;
        }
        if (count == 0) {
            throw ComparisonError("agent " + std::to_string(sim_id) +
                                  ": simulated and reference time ranges do not overlap");
        }
        const double mean = acc / count;
        stats.per_agent[sim_id] = mean;
        stats.samples[sim_id] = count;
        auto& [sum, n] = kind_acc[kinds[sim_id]];
        sum += mean;
        n += 1;
    }

    if (stats.per_agent.empty()) {
        throw ComparisonError("no comparable agents between the two logs");
    }
    for (const auto& [kind, acc] : kind_acc) {
        stats.per_kind[kind] = acc.first / acc.second;
    }
    return stats;
}

}  // namespace

DeviationStats trajectory_deviation(const TrajectoryLog& sim, const TrajectoryLog& ref,
                                    const std::map<int, int>& id_map) {
    return deviation(sim, ref, id_map, Metric::Position);
}

DeviationStats speed_deviation(const TrajectoryLog& sim, const TrajectoryLog& ref,
                               const std::map<int, int>& id_map) {
    return deviation(sim, ref, id_map, Metric::Speed);
}

std::vector<DeviationSeriesPoint> deviation_series(const TrajectoryLog& sim,
                                                   const TrajectoryLog& ref,
                                                   const std::map<int, int>& id_map) {
    const auto sim_samples = samples_by_agent(sim);
    const auto ref_samples = samples_by_agent(ref);

    std::vector<DeviationSeriesPoint> series;
    for (const auto& [sim_id, samples] : sim_samples) {
        const int ref_id = id_map.count(sim_id) ? id_map.at(sim_id) : sim_id;
        auto ref_it = ref_samples.find(ref_id);
        if (ref_it == ref_samples.end()) continue;
        for (const auto& s : samples) {
            const auto r = interpolate(ref_it->second, s.time);
            if (!r) continue;
            series.push_back({s.time, sim_id, distance(s.position, r->position),
                              std::abs(s.speed - r->speed)});
        }
    }
    return series;
}

}  // namespace sharedspace
