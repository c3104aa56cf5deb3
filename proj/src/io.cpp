#include "satcon/io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out += buf;
}

void append_block_header(std::string& out, const char* prefix, Index n, Index p) {
    for (Index i = 0; i < n; ++i) {
        for (Index l = 0; l < p; ++l) {
            out += ',';
            out += prefix;
            out += std::to_string(i + 1);
            if (p > 1) {
                out += '_';
                out += std::to_string(l + 1);
            }
        }
    }
}

void append_block(std::string& out, const Mat& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index l = 0; l < m.cols(); ++l) {
            out += ',';
            append_number(out, m(i, l));
        }
    }
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& trajectory) {
    std::string out = "t";
    const Index n = trajectory.agents();
    const Index p = trajectory.dimension();
    append_block_header(out, "x", n, p);
    append_block_header(out, "u", n, p);
    append_block_header(out, "sat", n, p);
    out += '\n';
    for (const auto& s : trajectory.samples) {
        append_number(out, s.t);
        append_block(out, s.x);
        append_block(out, s.u);
        append_block(out, s.sat_u);
        out += '\n';
    }
    return out;
}

std::string event_log_json(const EventLog& log) {
    nlohmann::json arr = nlohmann::json::array();
    for (Index i = 0; i < log.agents(); ++i) {
        nlohmann::json entry;
        entry["agent"] = i;
        entry["times"] = log.times[static_cast<std::size_t>(i)];
        arr.push_back(std::move(entry));
    }
    return arr.dump(2) + "\n";
}

std::string event_log_csv(const EventLog& log, const TriggerRule& rule, Index p,
                          double h) {
    std::string out = "agent,k,t_k,inter_event_gap,zeno_bound_at_t_k\n";
    for (Index i = 0; i < log.agents(); ++i) {
        const auto& ts = log.times[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < ts.size(); ++k) {
            out += std::to_string(i);
            out += ',';
            out += std::to_string(k + 1);
            out += ',';
            append_number(out, ts[k]);
            out += ',';
            if (k > 0) append_number(out, ts[k] - ts[k - 1]);
            out += ',';
            append_number(out, zeno_lower_bound(rule.alpha(i), rule.beta(i), p, h, ts[k]));
            out += '\n';
        }
    }
    return out;
}

}  // namespace satcon
