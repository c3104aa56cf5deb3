#include <cstdlib>
#include <exception>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satcon/errors.hpp"
#include "satcon/io.hpp"
#include "satcon/runner.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCertificate = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
    std::string mode;
    double t_end = 0.0;
    double dt = 0.0;
    double sample_dt = 0.0;
    std::string out_dir;
};

fs::path resolve_out_dir(const Overrides& o) {
    if (!o.out_dir.empty()) return o.out_dir;
    if (const char* env = std::getenv("SATCON_OUT"); env && *env) return env;
    return fs::current_path();
}

satcon::Scenario load_with_overrides(const std::string& file, const Overrides& o) {
    satcon::Scenario sc = satcon::load_scenario(file);
    if (!o.mode.empty()) {
        if (o.mode == "continuous") {
            sc.mode = satcon::RunMode::Continuous;
        } else if (o.mode == "event") {
            sc.mode = satcon::RunMode::Event;
        } else {
            throw satcon::ValidationError("--mode must be continuous or event");
        }
        if (sc.mode == satcon::RunMode::Event && sc.rule.alpha.size() == 0) {
            throw satcon::ValidationError("event mode needs alpha and beta in the scenario");
        }
    }
    if (o.t_end > 0.0) sc.t_end = o.t_end;
    if (o.dt > 0.0) sc.dt = o.dt;
    if (o.sample_dt > 0.0) sc.sample_dt = o.sample_dt;
    return sc;
}

int run_analyze(const std::string& file, const Overrides& o) {
    satcon::Scenario sc = load_with_overrides(file, o);
    nlohmann::json report = satcon::analyze_scenario(sc);
    satcon::atomic_write(resolve_out_dir(o) / (sc.name + "_analysis.json"),
                         report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    bool certified = true;
    for (const char* section : {"spectral", "blocks"}) {
        if (report.contains(section)) {
            for (const auto& c : report[section]["certificates"]) {
                certified = certified && c["pass"].get<bool>();
            }
        }
    }
    return certified ? kExitOk : kExitCertificate;
}

int run_simulate_one(const std::string& file, const Overrides& o) {
    satcon::Scenario sc = load_with_overrides(file, o);
    satcon::SimulationResult result = satcon::simulate_scenario(sc);
    satcon::write_run_artifacts(sc, result, resolve_out_dir(o));
    std::cout << satcon::summary_json(sc, result.summary).dump(2) << "\n";
    return kExitOk;
}

int run_simulate(const std::vector<std::string>& files, const Overrides& o, bool sweep) {
    if (!sweep || files.size() == 1) {
        int worst = kExitOk;
        for (const auto& f : files) worst = std::max(worst, run_simulate_one(f, o));
        return worst;
    }
    std::vector<std::future<int>> jobs;
    jobs.reserve(files.size());
    for (const auto& f : files) {
        jobs.push_back(std::async(std::launch::async, run_simulate_one, f, o));
    }
    int worst = kExitOk;
    for (auto& j : jobs) worst = std::max(worst, j.get());
    return worst;
}

int run_verify(const std::string& file, const Overrides& o) {
    satcon::Scenario sc = load_with_overrides(file, o);
    satcon::SimulationResult result = satcon::simulate_scenario(sc);
    fs::path out_dir = resolve_out_dir(o);
    satcon::write_run_artifacts(sc, result, out_dir);
    satcon::CertificateReport report = satcon::verify_scenario(sc, result);
    nlohmann::json j = satcon::certificate_json(report);
    satcon::atomic_write(out_dir / (sc.name + "_certificate.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return report.all_pass() ? kExitOk : kExitCertificate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and certificate suite for saturated multi-agent consensus "
                 "over digraphs, continuous or event-triggered"};
    app.require_subcommand(1);

    Overrides overrides;
    std::vector<std::string> files;
    bool sweep = false;

    auto add_common = [&overrides](CLI::App* cmd) {
        cmd->add_option("--mode", overrides.mode, "continuous or event");
        cmd->add_option("--t-end", overrides.t_end, "simulated horizon");
        cmd->add_option("--dt", overrides.dt, "integrator step (continuous mode)");
        cmd->add_option("--sample-dt", overrides.sample_dt, "output sampling interval");
        cmd->add_option("--out", overrides.out_dir,
                        "output directory (default: $SATCON_OUT or cwd)");
    };

    auto* analyze = app.add_subcommand("analyze", "graph + spectral report");
    analyze->add_option("file", files, "scenario file")->required()->expected(1);
    add_common(analyze);

    auto* simulate = app.add_subcommand("simulate", "run a scenario, write artifacts");
    simulate->add_option("files", files, "scenario file(s)")->required();
    simulate->add_flag("--sweep", sweep, "run multiple scenarios on worker threads");
    add_common(simulate);

    auto* verify = app.add_subcommand("verify", "run + certify every invariant");
    verify->add_option("file", files, "scenario file")->required()->expected(1);
    add_common(verify);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return run_analyze(files.front(), overrides);
        if (app.got_subcommand(simulate)) return run_simulate(files, overrides, sweep);
        if (app.got_subcommand(verify)) return run_verify(files.front(), overrides);
    } catch (const satcon::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const satcon::CertificateFailure& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return kExitCertificate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
