// Command-line front end: `stats` validates the prediction-error analytics
// against the Monte Carlo reference, `plan` solves one planning window, and
// `simulate` runs the network experiments and writes plot-ready CSVs.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pra/pra.hpp"

namespace fs = std::filesystem;
using namespace pra;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_infeasible = 2;

struct StatsOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    long samples = 0; // 0: take from config
    int workers = 0;
};

int run_stats(const StatsOptions& opt) {
    const Config cfg = Config::from_file(opt.config_path);
    const long samples = opt.samples > 0 ? opt.samples : cfg.get_int("stats_samples", 1000000);
    const int workers = opt.workers > 0 ? opt.workers : static_cast<int>(cfg.get_int("workers", 2));
    const int nt = static_cast<int>(cfg.get_int("num_antennas", 8));
    const int ts = static_cast<int>(cfg.get_int("stats_time_slots", 100));
    const auto snrs = cfg.get_list("stats_snr_db", {5.0, 35.0});
    const auto ratios = cfg.get_list("stats_delta_ratio", {1.0});
    const auto cvs = cfg.get_list("stats_bandwidth_cv", {0.2});
    const double wbar = cfg.get_double("stats_bandwidth_mhz", 1.0) * 1e6;

    // normalized radio: a linear gain of x means an SNR of x
    const RadioParams radio{nt, 1e6, 1.0, 1e-6};

    fs::create_directories(opt.out_dir);
    const std::string out_path = (fs::path(opt.out_dir) / "stats_grid.csv").string();
    csv::Writer w(out_path);
    w.header({"snr_db", "delta_ratio", "bandwidth_cv", "w_dist", "a_dist", "cf_mean", "cf_var",
              "oracle_mean", "oracle_var", "oracle_se", "ks_normal", "high_snr_ok"});

    std::uint64_t point = 0;
    for (double snr_db : snrs)
        for (double dr : ratios)
            for (double cv : cvs)
                for (Dist wd : {Dist::Gaussian, Dist::Uniform})
                    for (Dist ad : {Dist::Uniform, Dist::Gaussian}) {
                        const double a = std::pow(10.0, snr_db / 10.0);
                        const BandwidthPrediction bw{wbar, cv * wbar, wd};
                        const GainPrediction gain{a, 0.5 * dr * a, ad};
                        const TrueFrameState truth{wbar, a};
                        const RateErrorStats cf = rate_error_stats(bw, gain, truth, ts, radio);
                        const OracleResult mc = monte_carlo_error_oracle(
                            bw, gain, truth, ts, radio, static_cast<std::size_t>(samples),
                            opt.seed + point, workers);
                        ++point;
                        w.row({csv::Writer::cell(snr_db), csv::Writer::cell(dr),
                               csv::Writer::cell(cv),
                               std::string(wd == Dist::Gaussian ? "gaussian" : "uniform"),
                               std::string(ad == Dist::Gaussian ? "gaussian" : "uniform"),
                               csv::Writer::cell(cf.mean), csv::Writer::cell(cf.variance),
                               csv::Writer::cell(mc.mean), csv::Writer::cell(mc.variance),
                               csv::Writer::cell(mc.std_error), csv::Writer::cell(mc.ks_normal),
                               csv::Writer::cell(cf.high_snr_ok ? 1 : 0)});
                    }

    RunManifest manifest = RunManifest::for_config(cfg.raw_bytes(), opt.seed);
    manifest.outputs.push_back("stats_grid.csv");
    manifest.write((fs::path(opt.out_dir) / "run_manifest.txt").string());
    std::cout << "wrote " << out_path << "\n";
    return exit_ok;
}

struct PlanOptions {
    std::string config_path;
    std::string out_path = "plan.txt";
    std::string objective = "proposed";
};

int run_plan(const PlanOptions& opt) {
    const Config cfg = Config::from_file(opt.config_path);
    TimeGrid grid;
    grid.frames_per_window = static_cast<int>(cfg.get_int("frames_per_window"));
    grid.slots_per_frame = static_cast<int>(cfg.get_int("slots_per_frame", 100));
    grid.frame_duration_s = cfg.get_double("frame_duration_s", 1.0);
    grid.segment_frames = static_cast<int>(cfg.get_int("segment_frames"));
    grid.validate();

    std::vector<UserPlanInput> users;
    for (int i = 0;; ++i) {
        const std::string prefix = "user" + std::to_string(i) + ".";
        if (!cfg.has(prefix + "segment_mbit")) break;
        UserPlanInput u;
        u.user_id = i;
        for (double mbit : cfg.get_list(prefix + "segment_mbit"))
            u.segment_bits.push_back(mbit * 1e6);
        u.initial_delay_frames = static_cast<int>(cfg.get_int(prefix + "t_w", 0));
        u.first_play_offset_frames = static_cast<int>(cfg.get_int(prefix + "t_1", 0));
        for (double mbps : cfg.get_list(prefix + "rates_mbps"))
            u.predicted_rates_bps.push_back(mbps * 1e6);
        if (u.predicted_rates_bps.empty())
            throw std::runtime_error("config: " + prefix + "rates_mbps is empty");
        u.predicted_rates_bps.resize(static_cast<std::size_t>(grid.frames_per_window),
                                     u.predicted_rates_bps.back());
        if (cfg.has(prefix + "bs")) {
            for (double b : cfg.get_list(prefix + "bs"))
                u.serving_bs.push_back(static_cast<int>(b));
            u.serving_bs.resize(static_cast<std::size_t>(grid.frames_per_window),
                                u.serving_bs.back());
        } else {
            u.serving_bs.assign(static_cast<std::size_t>(grid.frames_per_window), 0);
        }
        users.push_back(std::move(u));
    }

    PlanObjective obj = PlanObjective::WeightedTime;
    if (opt.objective == "min-time") obj = PlanObjective::MinTime;
    else if (opt.objective == "max-throughput") obj = PlanObjective::MaxThroughput;
    else if (opt.objective != "proposed")
        throw CLI::ValidationError("--objective must be proposed, min-time or max-throughput");

    try {
        const OptimizeResult res = optimize_t_mw(users, grid, obj);
        std::ofstream os(opt.out_path);
        if (!os) throw std::runtime_error("cannot write " + opt.out_path);
        write_plan(os, res.plan);
        std::cout << "t_mw* = " << res.t_mw_star << " frames, objective = "
                  << csv::format_double(res.plan.objective_value) << "\n";
    } catch (const PlanInfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n"
                  << "binding constraint: " << e.binding_row << " (short by "
                  << csv::format_double(e.violation_bits) << " bits)\n";
        return exit_infeasible;
    } catch (const PlanStructureError& e) {
        std::cerr << "infeasible window structure: " << e.what() << "\n";
        return exit_infeasible;
    }
    return exit_ok;
}

struct SimOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string figure;
    std::string scheme;
    std::string csi;
    long trials = 0;
    long seed = -1;
    int workers = 0;
};

ScenarioConfig scenario_for(const SimOptions& opt, const Config& cfg) {
    ScenarioConfig s = scenario_from_config(cfg);
    if (opt.trials > 0) s.trials = static_cast<int>(opt.trials);
    if (opt.seed >= 0) s.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.workers > 0) s.workers = opt.workers;
    if (!opt.scheme.empty()) s.scheme = scheme_from_string(opt.scheme);
    if (!opt.csi.empty()) {
        if (opt.csi != "on" && opt.csi != "off")
            throw CLI::ValidationError("--csi must be on or off");
        s.use_csi = opt.csi == "on";
    }
    return s;
}

std::vector<double> sweep_rates(const Config& cfg) {
    return cfg.get_list("sweep_rates_per_s", {0.1, 0.2, 0.3, 0.4, 0.5});
}

void write_curve(csv::Writer& w, const ScenarioConfig& base, const std::string& label,
                 const std::vector<double>& rates) {
    ScenarioConfig cfg = base;
    for (double r : rates) {
        cfg.arrival_rate_per_s = r;
        const QosReport rep = run_experiment(cfg);
        w.row({csv::Writer::cell(r), label, csv::Writer::cell(rep.mean_total_stall_s()),
               csv::Writer::cell(rep.satisfaction_fraction()),
               csv::Writer::cell(rep.users.size())});
    }
}

int run_simulate(const SimOptions& opt) {
    const Config cfg = Config::from_file(opt.config_path);
    const ScenarioConfig base = scenario_for(opt, cfg);
    fs::create_directories(opt.out_dir);
    RunManifest manifest = RunManifest::for_config(cfg.raw_bytes(), base.seed);

    auto out_file = [&](const std::string& name) {
        manifest.outputs.push_back(name);
        return (fs::path(opt.out_dir) / name).string();
    };

    if (opt.figure == "f4") {
        // CSI on/off for the proposed and min-time planners
        csv::Writer w(out_file("fig4_csi.csv"));
        w.header({"arrival_rate_per_s", "scheme", "mean_total_stall_s", "satisfaction",
                  "num_users"});
        for (Scheme s : {Scheme::Proposed, Scheme::MinTime})
            for (bool csi : {true, false}) {
                ScenarioConfig c = base;
                c.scheme = s;
                c.use_csi = csi;
                write_curve(w, c, std::string(scheme_name(s)) + (csi ? "/csi" : "/no-csi"),
                            sweep_rates(cfg));
            }
    } else if (opt.figure == "f5") {
        // VoD vs reservations with 10 s and 20 s leads
        csv::Writer w(out_file("fig5_service.csv"));
        w.header({"arrival_rate_per_s", "scheme", "mean_total_stall_s", "satisfaction",
                  "num_users"});
        for (Scheme s : {Scheme::Proposed, Scheme::NonpredQos}) {
            ScenarioConfig c = base;
            c.scheme = s;
            c.service = ServiceType::VoD;
            write_curve(w, c, std::string(scheme_name(s)) + "/vod", sweep_rates(cfg));
            c.service = ServiceType::VoR;
            for (double lead_s : cfg.get_list("vor_leads_s", {10.0, 20.0})) {
                c.reservation_lead_frames =
                    static_cast<int>(std::lround(lead_s / c.grid.frame_duration_s));
                write_curve(w, c,
                            std::string(scheme_name(s)) + "/vor-" +
                                csv::format_double(lead_s),
                            sweep_rates(cfg));
            }
        }
    } else if (opt.figure == "f6") {
        // traffic-carrying ability: max supportable rate vs stall tolerance
        csv::Writer w(out_file("fig6_maxrate.csv"));
        w.header({"tolerance_s", "scheme", "max_rate_per_s"});
        const double quantile = cfg.get_double("satisfaction_quantile", 0.99);
        for (Scheme s : {Scheme::Proposed, Scheme::MaxThroughput, Scheme::MinTime,
                         Scheme::NonpredQos, Scheme::NonpredBestEffort}) {
            ScenarioConfig c = base;
            c.scheme = s;
            for (double tol : cfg.get_list("fig6_tolerances_s", {5.0, 10.0, 20.0})) {
                const SweepResult sr = sweep_arrival_rate(c, sweep_rates(cfg),
                                                          c.vod_initial_delay() *
                                                                  c.grid.frame_duration_s +
                                                              tol,
                                                          quantile);
                w.row({csv::Writer::cell(tol), scheme_name(s),
                       csv::Writer::cell(sr.max_supportable_rate)});
            }
        }
    } else if (opt.figure == "f7") {
        // average total stalling time vs arrival rate for all schemes
        csv::Writer w(out_file("fig7_stall.csv"));
        w.header({"arrival_rate_per_s", "scheme", "mean_total_stall_s", "satisfaction",
                  "num_users"});
        for (Scheme s : {Scheme::Proposed, Scheme::MaxThroughput, Scheme::MinTime,
                         Scheme::NonpredQos, Scheme::NonpredBestEffort}) {
            ScenarioConfig c = base;
            c.scheme = s;
            write_curve(w, c, scheme_name(s), sweep_rates(cfg));
        }
        ScenarioConfig perfect = base;
        perfect.scheme = Scheme::Proposed;
        perfect.bandwidth_cv = 0.0;
        perfect.gain_delta_ratio = 0.0;
        write_curve(w, perfect, "proposed/error-free", sweep_rates(cfg));
    } else if (opt.figure == "f8") {
        // CDFs of the per-user QoS indicators at one arrival rate
        const double rate = cfg.get_double("fig8_rate_per_s", 0.5);
        csv::Writer wf(out_file("fig8_cdf_stall_count.csv"));
        csv::Writer wt(out_file("fig8_cdf_stall_time.csv"));
        csv::Writer wm(out_file("fig8_cdf_max_stall.csv"));
        for (auto* w : {&wf, &wt, &wm}) w->header({"scheme", "value", "cdf"});
        for (Scheme s : {Scheme::Proposed, Scheme::MaxThroughput, Scheme::MinTime,
                         Scheme::NonpredQos, Scheme::NonpredBestEffort}) {
            ScenarioConfig c = base;
            c.scheme = s;
            c.arrival_rate_per_s = rate;
            const QosReport rep = run_experiment(c);
            std::vector<double> count, time, mx;
            for (const auto& u : rep.users) {
                count.push_back(u.stall_count);
                time.push_back(u.stall_time_s);
                mx.push_back(u.max_single_stall_s);
            }
            auto emit = [&](csv::Writer& w, std::vector<double> v) {
                for (const auto& [x, p] : stats::empirical_cdf(std::move(v)))
                    w.row({scheme_name(s), csv::Writer::cell(x), csv::Writer::cell(p)});
            };
            emit(wf, count);
            emit(wt, time);
            emit(wm, mx);
        }
    } else {
        throw CLI::ValidationError("--figure must be one of f4, f5, f6, f7, f8");
    }

    manifest.write((fs::path(opt.out_dir) / "run_manifest.txt").string());
    std::cout << "wrote " << manifest.outputs.size() << " files to " << opt.out_dir << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictive resource allocation over residual network capacity"};
    app.require_subcommand(1);

    StatsOptions stats_opt;
    CLI::App* stats = app.add_subcommand(
        "stats", "closed-form prediction-error moments vs the Monte Carlo reference");
    stats->add_option("--config", stats_opt.config_path, "config file")
        ->required()
        ->envname("PRA_CONFIG");
    stats->add_option("--out-dir", stats_opt.out_dir, "output directory")->envname("PRA_OUT_DIR");
    stats->add_option("--seed", stats_opt.seed, "rng seed")->envname("PRA_SEED");
    stats->add_option("--samples", stats_opt.samples, "samples per grid point");
    stats->add_option("--workers", stats_opt.workers, "worker threads")->envname("PRA_WORKERS");

    PlanOptions plan_opt;
    CLI::App* plan = app.add_subcommand("plan", "solve one planning window");
    plan->add_option("--config", plan_opt.config_path, "window description file")
        ->required()
        ->envname("PRA_CONFIG");
    plan->add_option("--out", plan_opt.out_path, "plan output file");
    plan->add_option("--objective", plan_opt.objective,
                     "proposed | min-time | max-throughput")
        ->envname("PRA_OBJECTIVE");

    SimOptions sim_opt;
    CLI::App* sim = app.add_subcommand("simulate", "network QoS experiments");
    sim->add_option("--config", sim_opt.config_path, "scenario config file")
        ->required()
        ->envname("PRA_CONFIG");
    sim->add_option("--figure", sim_opt.figure, "f4 | f5 | f6 | f7 | f8")->required();
    sim->add_option("--out-dir", sim_opt.out_dir, "output directory")->envname("PRA_OUT_DIR");
    sim->add_option("--trials", sim_opt.trials, "Monte Carlo trials")->envname("PRA_TRIALS");
    sim->add_option("--seed", sim_opt.seed, "rng seed")->envname("PRA_SEED");
    sim->add_option("--workers", sim_opt.workers, "worker threads")->envname("PRA_WORKERS");
    sim->add_option("--scheme", sim_opt.scheme, "override the configured scheme")
        ->envname("PRA_SCHEME");
    sim->add_option("--csi", sim_opt.csi, "on | off")->envname("PRA_CSI");

    try {
        app.parse(argc, argv);
        if (*stats) return run_stats(stats_opt);
        if (*plan) return run_plan(plan_opt);
        if (*sim) return run_simulate(sim_opt);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    } catch (const Config::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const PlanInfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}
