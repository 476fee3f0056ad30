#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "triphibot/metrics.hpp"
#include "triphibot/simkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace triphibot;

// TRIPHIBOT_LOG_DIR overrides --out / the working directory for logs.
fs::path log_dir(const std::string& out) {
    if (const char* env = std::getenv("TRIPHIBOT_LOG_DIR")) return fs::path(env);
    return fs::path(out);
}

int cmd_sim_run(const std::string& scenario_path, const std::string& out) {
    Scenario sc = load_scenario(scenario_path);
    RunLog log = run(sc);

    const fs::path dir = log_dir(out);
    fs::create_directories(dir);
    const fs::path csv = dir / (sc.name + ".csv");
    save_csv(log, csv.string());
    std::printf("log: %s (%zu rows, %zu events)\n", csv.string().c_str(), log.rows.size(),
                log.events.size());
    if (log.aborted) {
        std::printf("aborted: %s\n", log.abort_reason.c_str());
        return 2;
    }

    LogTable table = read_log(csv.string());
    MetricsReport rep = metrics(table);
    if (rep.rmse_m >= 0.0) std::printf("rmse: %.6f m\n", rep.rmse_m);
    std::printf("pitch range: [%.2f, %.2f] deg\n", rep.pitch_min_deg, rep.pitch_max_deg);
    if (rep.mean_solve_ms >= 0.0) std::printf("mean solve: %.3f ms\n", rep.mean_solve_ms);
    for (const auto& e : rep.events) std::printf("event: %s\n", e.c_str());

    if (sc.max_rmse >= 0.0 && (rep.rmse_m < 0.0 || rep.rmse_m > sc.max_rmse)) {
        std::printf("FAIL: rmse %.6f exceeds threshold %.6f\n", rep.rmse_m, sc.max_rmse);
        return 1;
    }
    return 0;
}

int cmd_bench_motor(const std::string& profile, const std::string& driver,
                    const std::string& medium_s, double target_rpm, const std::string& out) {
    BenchProfile prof;
    prof.name = profile;
    prof.target_rpm = target_rpm;
    if (profile == "sweep")
        prof.sweep_rpm = {150, 250, 350, 420, 500, 600};
    if (profile == "square") {
        prof.half_period = 0.25;
        prof.duration = 2.0;
    }
    const DriverKind kind = driver == "esc" ? DriverKind::Esc : DriverKind::Foc;
    const Medium medium = medium_s == "water" ? Medium::Water : Medium::Air;

    MotorParams mp;
    VehicleParams vp;
    std::vector<BenchSample> trace = run_motor_bench(prof, kind, medium, mp, vp);

    const fs::path dir = log_dir(out);
    fs::create_directories(dir);
    const fs::path csv = dir / ("bench_" + profile + "_" + driver + "_" + medium_s + ".csv");
    FILE* f = std::fopen(csv.string().c_str(), "wb");
    if (!f) {
        std::fprintf(stderr, "cannot open %s\n", csv.string().c_str());
        return 2;
    }
    std::fprintf(f, "t,rpm_ref,rpm,i_d,i_q,v_d,v_q,power,thrust\n");
    for (const BenchSample& s : trace)
        std::fprintf(f, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t, s.rpm_ref, s.rpm,
                     s.i_d, s.i_q, s.v_d, s.v_q, s.power, s.thrust);
    std::fclose(f);

    PowerReport rep = power_and_specific_thrust(trace);
    std::printf("log: %s\n", csv.string().c_str());
    std::printf("mean rpm: %.1f  power: %.3f W  specific thrust: %.4f N/W  steady: %s\n",
                rep.mean_rpm, rep.power, rep.specific_thrust, rep.steady ? "yes" : "no");
    return 0;
}

int cmd_eval_rmse(const std::string& log_path, bool as_printed) {
    LogTable table = read_log(log_path);
    const int cp = table.col("px"), cr = table.col("ref_px");
    if (cp < 0 || cr < 0) {
        std::fprintf(stderr, "log lacks position/reference columns\n");
        return 2;
    }
    std::vector<Eigen::Vector3d> p, r;
    for (const auto& row : table.rows) {
        p.emplace_back(row[cp], row[cp + 1], row[cp + 2]);
        r.emplace_back(row[cr], row[cr + 1], row[cr + 2]);
    }
    std::printf("rmse: %.9g m\n", rmse(p, r, as_printed));
    return 0;
}

int cmd_eval_metrics(const std::string& log_path) {
    MetricsReport rep = metrics(read_log(log_path));
    if (rep.rmse_m >= 0.0) std::printf("rmse: %.6f m\n", rep.rmse_m);
    std::printf("pitch range: [%.2f, %.2f] deg\n", rep.pitch_min_deg, rep.pitch_max_deg);
    if (rep.phase_lag_s >= 0.0) std::printf("phase lag: %.3f s\n", rep.phase_lag_s);
    if (rep.mean_solve_ms >= 0.0) std::printf("mean solve: %.3f ms\n", rep.mean_solve_ms);
    for (const auto& e : rep.events) std::printf("event: %s\n", e.c_str());
    for (const auto& n : rep.notes) std::printf("note: %s\n", n.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"triphibot: triphibious quadrotor simulator"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("sim", "run simulations");
    auto* sim_run = sim->add_subcommand("run", "run a scenario file");
    std::string scenario_path, out_dir = ".";
    sim_run->add_option("--scenario", scenario_path, "scenario config file")->required();
    sim_run->add_option("--out", out_dir, "output directory");

    auto* bench = app.add_subcommand("bench", "propulsion benches");
    auto* bench_motor = bench->add_subcommand("motor", "single motor + prop bench");
    std::string profile = "step", driver = "foc", medium = "water";
    double target_rpm = 420.0;
    bench_motor->add_option("--profile", profile, "step | square | sweep");
    bench_motor->add_option("--driver", driver, "foc | esc");
    bench_motor->add_option("--medium", medium, "air | water");
    bench_motor->add_option("--rpm", target_rpm, "target speed, RPM");
    bench_motor->add_option("--out", out_dir, "output directory");

    auto* eval = app.add_subcommand("eval", "evaluate logs");
    auto* eval_rmse = eval->add_subcommand("rmse", "position RMSE of a run log");
    std::string log_path;
    bool as_printed = false;
    eval_rmse->add_option("--log", log_path, "run log CSV")->required();
    eval_rmse->add_flag("--as-printed", as_printed, "unsquared-norm RMSE variant");
    auto* eval_metrics = eval->add_subcommand("metrics", "metric bundle of a run log");
    eval_metrics->add_option("--log", log_path, "run log CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_run->parsed()) return cmd_sim_run(scenario_path, out_dir);
        if (bench_motor->parsed()) return cmd_bench_motor(profile, driver, medium, target_rpm, out_dir);
        if (eval_rmse->parsed()) return cmd_eval_rmse(log_path, as_printed);
        if (eval_metrics->parsed()) return cmd_eval_metrics(log_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
