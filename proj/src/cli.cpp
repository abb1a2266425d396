#include "uavbeam/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "uavbeam/csvio.hpp"
#include "uavbeam/episode.hpp"
#include "uavbeam/errors.hpp"
#include "uavbeam/lrnet.hpp"
#include "uavbeam/svgplot.hpp"

namespace uavbeam::cli {

namespace {

// Seed streams. Training data and evaluation episodes derive from disjoint
// children of the base seed so held-out episodes are never seen in training.
constexpr std::uint64_t kStreamDataset = 0xD5;
constexpr std::uint64_t kStreamEpisodes = 0xE5;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool far_preset = false;
};

ScenarioConfig load_scenario(const CommonOpts& opts) {
    ScenarioConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = load_scenario_config(read_file(opts.config_path));
    }
    if (opts.far_preset) {
        cfg.uav_start = {70.0, 70.0};
    }
    if (opts.seed_given) {
        cfg.seed = opts.seed;
    }
    return cfg;
}

TrainConfig load_train(const CommonOpts& opts) {
    if (opts.config_path.empty()) {
        return TrainConfig{};
    }
    return load_train_config(read_file(opts.config_path));
}

std::string numbered(const std::string& path, int index) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_%03d", index);
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos) {
        return path + suffix;
    }
    return path.substr(0, dot) + suffix + path.substr(dot);
}

LrnetModel load_model_checked(const std::string& path, const ScenarioConfig& cfg) {
    LrnetModel model = load_model(path);
    if (model.window_l != cfg.window_l) {
        throw ConfigError("model window_l=" + std::to_string(model.window_l) +
                          " does not match config window_l=" + std::to_string(cfg.window_l));
    }
    return model;
}

KalmanMode parse_kalman_mode(const std::string& mode) {
    if (mode == "two-point") {
        return KalmanMode::two_point_reinit;
    }
    if (mode == "continuous") {
        return KalmanMode::continuous;
    }
    throw ConfigError("unknown kalman mode: " + mode);
}

void print_episode_table(std::ostream& out, const std::vector<SummaryMetrics>& eps) {
    out << "episode  rate_genie  rate_lrnet  rate_kalman  ratio_lrnet  ratio_kalman"
           "  med_err_lrnet_m  med_err_kalman_m\n";
    char line[256];
    SchemeSummary agg_g{}, agg_l{}, agg_k{};
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& ep = eps[i];
        std::snprintf(line, sizeof(line),
                      "%-7zu  %10.6f  %10.6f  %11.6f  %11.9f  %12.9f  %15.6f  %16.6f\n", i,
                      ep.genie.mean_rate, ep.lrnet.mean_rate, ep.kalman.mean_rate,
                      ep.lrnet.rate_ratio, ep.kalman.rate_ratio, ep.lrnet.median_err,
                      ep.kalman.median_err);
        out << line;
        agg_g.mean_rate += ep.genie.mean_rate;
        agg_l.mean_rate += ep.lrnet.mean_rate;
        agg_k.mean_rate += ep.kalman.mean_rate;
        agg_l.rate_ratio += ep.lrnet.rate_ratio;
        agg_k.rate_ratio += ep.kalman.rate_ratio;
        agg_l.median_err += ep.lrnet.median_err;
        agg_k.median_err += ep.kalman.median_err;
    }
    const double n = static_cast<double>(eps.size());
    std::snprintf(line, sizeof(line),
                  "%-7s  %10.6f  %10.6f  %11.6f  %11.9f  %12.9f  %15.6f  %16.6f\n", "mean",
                  agg_g.mean_rate / n, agg_l.mean_rate / n, agg_k.mean_rate / n,
                  agg_l.rate_ratio / n, agg_k.rate_ratio / n, agg_l.median_err / n,
                  agg_k.median_err / n);
    out << line;
}

int cmd_generate(std::ostream& out, const CommonOpts& common, const std::string& out_path,
                 int count) {
    ScenarioConfig cfg = load_scenario(common);
    for (int i = 0; i < count; ++i) {
        ScenarioConfig c = cfg;
        if (count > 1) {
            c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        }
        const Trajectory traj = generate_trajectory(c);
        const std::string path = count > 1 ? numbered(out_path, i) : out_path;
        write_raw_trajectory_csv(traj, path);
        out << "wrote " << path << " (" << traj.locations.size() << " slots, seed " << c.seed
            << ")\n";
    }
    return 0;
}

int cmd_train(std::ostream& out, const CommonOpts& common, int trajectories, int epochs,
              int batch, double lr, int h1, int h2, const std::string& model_path,
              std::string loss_path) {
    ScenarioConfig cfg = load_scenario(common);
    TrainConfig tcfg = load_train(common);
    if (common.seed_given) {
        tcfg.seed = common.seed;
    }
    if (epochs > 0) tcfg.epochs = epochs;
    if (batch > 0) tcfg.batch_size = batch;
    if (lr >= 0.0) tcfg.learning_rate = lr;
    validate(tcfg);

    const int per_traj = cfg.k_slots - cfg.window_l;
    const bool derived = trajectories <= 0;
    const int n_traj =
        derived ? (tcfg.n_examples + per_traj - 1) / per_traj : trajectories;
    std::vector<TrainingExample> dataset =
        build_dataset(cfg, n_traj, derive_seed(tcfg.seed, kStreamDataset));
    if (derived && static_cast<int>(dataset.size()) > tcfg.n_examples) {
        dataset.resize(tcfg.n_examples);
    }

    LrnetModel model = make_model(cfg.window_l, h1, h2, tcfg.seed);
    out << "training lrnet (" << h1 << ", " << h2 << ") on " << dataset.size()
        << " examples, " << tcfg.epochs << " epochs, batch " << tcfg.batch_size << ", lr "
        << tcfg.learning_rate << ", seed " << tcfg.seed << " [" << RandomSource::kAlgorithm
        << "]\n";
    const TrainResult result = train(model, dataset, tcfg);
    save_model(model, model_path);
    if (loss_path.empty()) {
        const auto dot = model_path.find_last_of('.');
        loss_path = (dot == std::string::npos ? model_path : model_path.substr(0, dot)) +
                    "_loss.csv";
    }
    write_loss_csv(result.history, loss_path);
    char line[200];
    std::snprintf(line, sizeof(line),
                  "train loss %.8g -> %.8g m^2; best validation loss %.8g m^2 at epoch %d\n",
                  result.initial_train_loss, result.history.back().train_loss,
                  result.best_val_loss, result.best_epoch);
    out << line;
    out << "wrote " << model_path << " and " << loss_path << "\n";
    return 0;
}

int cmd_gradcheck(std::ostream& out, std::uint64_t seed, double epsilon, int models,
                  int windows, int samples, bool skip_full) {
    double worst = 0.0;

    // exhaustive sweep over small models
    for (int i = 0; i < models; ++i) {
        const std::uint64_t ms = derive_seed(seed, static_cast<std::uint64_t>(i));
        const LrnetModel model = make_model(3, 4, 5, ms);
        RandomSource rng(derive_seed(ms, 0xF00D));
        TrainingExample ex;
        ex.input = Mat(2, 3);
        for (auto& v : ex.input.a) {
            v = rng.uniform(-1.0, 1.0);
        }
        ex.label = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double rel = grad_check(model, ex, epsilon, 0);
        worst = std::max(worst, rel);
        char line[96];
        std::snprintf(line, sizeof(line), "small model %2d: max relative error %.3e\n", i, rel);
        out << line;
    }

    if (!skip_full) {
        // full stack shape on real windows, seeded subsample per tensor
        const LrnetModel model = make_model(20, 50, 100, derive_seed(seed, 0x1000));
        ScenarioConfig cfg;
        cfg.seed = derive_seed(seed, 0x2000);
        const auto dataset = build_dataset(cfg, 1, cfg.seed);
        for (int w = 0; w < windows; ++w) {
            const auto& ex = dataset[static_cast<std::size_t>(w) * dataset.size() / windows];
            const double rel = grad_check(model, ex, epsilon, samples);
            worst = std::max(worst, rel);
            char line[96];
            std::snprintf(line, sizeof(line),
                          "full shape (L=20, 50, 100) window %d: max relative error %.3e\n", w,
                          rel);
            out << line;
        }
    }

    char line[96];
    std::snprintf(line, sizeof(line), "gradcheck max relative error %.3e (threshold 1e-06)\n",
                  worst);
    out << line;
    return worst < 1e-6 ? 0 : 3;
}

int cmd_simulate(std::ostream& out, const CommonOpts& common, const std::string& model_path,
                 const std::string& prefix, const std::string& kalman_mode) {
    ScenarioConfig cfg = load_scenario(common);
    const LrnetModel model = load_model_checked(model_path, cfg);
    EpisodeOptions options;
    options.kalman_mode = parse_kalman_mode(kalman_mode);
    const auto records = run_episode(model, cfg, cfg.seed, options);
    write_trajectory_csv(records, prefix + "_trajectory.csv");
    write_rate_csv(records, prefix + "_rate.csv");
    out << "wrote " << prefix << "_trajectory.csv and " << prefix << "_rate.csv\n";
    print_episode_table(out, {summarize(records)});
    return 0;
}

int cmd_failover(std::ostream& out, const CommonOpts& common, const std::string& model_path,
                 int blackout_start, int blackout_len, const std::string& prefix) {
    ScenarioConfig cfg = load_scenario(common);
    const LrnetModel model = load_model_checked(model_path, cfg);
    std::set<int> blackout;
    for (int k = blackout_start; k < blackout_start + blackout_len; ++k) {
        blackout.insert(k);
    }
    const auto records = run_failover_episode(model, cfg, cfg.seed, blackout);
    write_trajectory_csv(records, prefix + "_trajectory.csv");
    write_rate_csv(records, prefix + "_rate.csv");
    out << "wrote " << prefix << "_trajectory.csv and " << prefix << "_rate.csv\n";

    double lrnet_rate = 0.0, kalman_rate = 0.0, genie_rate = 0.0;
    for (int k : blackout) {
        genie_rate += records[k].genie.rate;
        lrnet_rate += records[k].lrnet.rate;
        kalman_rate += records[k].kalman.rate;
    }
    const double n = static_cast<double>(blackout.size());
    char line[160];
    std::snprintf(line, sizeof(line),
                  "blackout slots [%d, %d): mean rate genie %.6f, lrnet %.6f, kalman %.6f\n",
                  blackout_start, blackout_start + blackout_len, genie_rate / n, lrnet_rate / n,
                  kalman_rate / n);
    out << line;
    return 0;
}

int cmd_compare(std::ostream& out, const CommonOpts& common, const std::string& model_path,
                int episodes, const std::string& out_dir, const std::string& kalman_mode) {
    ScenarioConfig cfg = load_scenario(common);
    const std::uint64_t base_seed = common.seed_given ? common.seed : cfg.seed;

    LrnetModel model;
    std::string model_origin;
    if (!model_path.empty()) {
        model = load_model_checked(model_path, cfg);
        model_origin = model_path;
    } else {
        // deterministic quick-train so compare works stand-alone
        TrainConfig tcfg;
        tcfg.epochs = 10;
        tcfg.seed = base_seed;
        std::vector<TrainingExample> dataset =
            build_dataset(cfg, 10, derive_seed(base_seed, kStreamDataset));
        model = make_model(cfg.window_l, 50, 100, tcfg.seed);
        out << "# no --model given: quick-training on " << dataset.size()
            << " windows (10 trajectories, 10 epochs)\n";
        train(model, dataset, tcfg);
        model_origin = "quick-train";
    }

    std::filesystem::create_directories(out_dir);
    EpisodeOptions options;
    options.kalman_mode = parse_kalman_mode(kalman_mode);

    const std::uint64_t episode_base = derive_seed(base_seed, kStreamEpisodes);
    std::vector<SummaryMetrics> summaries;
    for (int e = 0; e < episodes; ++e) {
        const std::uint64_t es = derive_seed(episode_base, static_cast<std::uint64_t>(e));
        const auto records = run_episode(model, cfg, es, options);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "/ep%03d", e);
        write_trajectory_csv(records, out_dir + stem + "_trajectory.csv");
        write_rate_csv(records, out_dir + stem + "_rate.csv");
        summaries.push_back(summarize(records));
    }
    write_summary_csv(summaries, out_dir + "/summary.csv");

    char meta[256];
    std::snprintf(meta, sizeof(meta),
                  "# uavbeam compare: %d episodes, base seed %llu, model %s\n", episodes,
                  static_cast<unsigned long long>(base_seed), model_origin.c_str());
    out << meta;
    std::snprintf(meta, sizeof(meta), "# config hash %016llx, rng %s\n",
                  static_cast<unsigned long long>(config_hash(cfg)),
                  RandomSource::kAlgorithm);
    out << meta;
    out << "# episode seeds: derive(derive(seed, 0xE5), e); training data uses stream 0xD5\n";
    out << "# metrics over post-warm-up slots; std-dev population (1/n)\n";
    print_episode_table(out, summaries);
    out << "wrote per-episode CSVs and summary.csv under " << out_dir << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"uavbeam: location-predictive beam tracking simulator"};
    app.require_subcommand(1);

    CommonOpts common;
    auto add_common = [&common](CLI::App* cmd, bool with_far = false) {
        cmd->add_option("--config", common.config_path, "scenario/train config JSON");
        auto* seed_opt = cmd->add_option("--seed", common.seed, "base seed");
        cmd->parse_complete_callback(
            [&common, seed_opt] { common.seed_given = seed_opt->count() > 0; });
        if (with_far) {
            cmd->add_flag("--far", common.far_preset, "start the UAV at (70, 70) m");
        }
    };

    auto* c_generate = app.add_subcommand("generate", "write trajectory CSVs");
    std::string gen_out = "trajectory.csv";
    int gen_count = 1;
    add_common(c_generate);
    c_generate->add_option("--out", gen_out, "output CSV path")->required();
    c_generate->add_option("--count", gen_count, "number of trajectories")
        ->check(CLI::PositiveNumber);

    auto* c_train = app.add_subcommand("train", "train the location predictor");
    std::string train_out, train_loss;
    int train_traj = 0, train_epochs = 0, train_batch = 0, train_h1 = 50, train_h2 = 100;
    double train_lr = -1.0;
    add_common(c_train);
    c_train->add_option("--out", train_out, "output model JSON path")->required();
    c_train->add_option("--loss-csv", train_loss, "loss history CSV path");
    c_train->add_option("--trajectories", train_traj, "training trajectories (0: derive)");
    c_train->add_option("--epochs", train_epochs, "override epochs");
    c_train->add_option("--batch", train_batch, "override batch size");
    c_train->add_option("--lr", train_lr, "override learning rate");
    c_train->add_option("--hidden1", train_h1, "layer-1 hidden size");
    c_train->add_option("--hidden2", train_h2, "layer-2 hidden size");

    auto* c_gradcheck = app.add_subcommand("gradcheck", "verify BPTT against finite differences");
    std::uint64_t gc_seed = 7;
    double gc_eps = 1e-5;
    int gc_models = 10, gc_windows = 3, gc_samples = 128;
    bool gc_skip_full = false;
    c_gradcheck->add_option("--seed", gc_seed, "base seed");
    c_gradcheck->add_option("--epsilon", gc_eps, "central-difference step");
    c_gradcheck->add_option("--models", gc_models, "small-model sweep size");
    c_gradcheck->add_option("--windows", gc_windows, "windows for the full shape");
    c_gradcheck->add_option("--samples", gc_samples, "checked parameters per tensor (full shape)");
    c_gradcheck->add_flag("--skip-full", gc_skip_full, "skip the full Table-size check");

    auto* c_simulate = app.add_subcommand("simulate", "run one episode with a trained model");
    std::string sim_model, sim_prefix = "episode", sim_kmode = "two-point";
    add_common(c_simulate, true);
    c_simulate->add_option("--model", sim_model, "model JSON path")->required();
    c_simulate->add_option("--out-prefix", sim_prefix, "output file prefix");
    c_simulate->add_option("--kalman-mode", sim_kmode, "two-point | continuous");

    auto* c_failover = app.add_subcommand("failover", "episode with a telemetry blackout");
    std::string fo_model, fo_prefix = "failover";
    int fo_start = 0, fo_len = 5;
    add_common(c_failover);
    c_failover->add_option("--model", fo_model, "model JSON path")->required();
    c_failover->add_option("--blackout-start", fo_start, "first blackout slot")->required();
    c_failover->add_option("--blackout-len", fo_len, "blackout length in slots");
    c_failover->add_option("--out-prefix", fo_prefix, "output file prefix");

    auto* c_compare = app.add_subcommand("compare", "genie vs lrnet vs kalman over episodes");
    std::string cmp_model, cmp_dir = "compare_out", cmp_kmode = "two-point";
    int cmp_episodes = 10;
    add_common(c_compare, true);
    c_compare->add_option("--model", cmp_model, "model JSON path (default: quick-train)");
    c_compare->add_option("--episodes", cmp_episodes, "episode count")
        ->check(CLI::PositiveNumber);
    c_compare->add_option("--out-dir", cmp_dir, "output directory");
    c_compare->add_option("--kalman-mode", cmp_kmode, "two-point | continuous");

    auto* c_plot = app.add_subcommand("plot", "render a rate/trajectory CSV as SVG");
    std::string plot_in, plot_out;
    c_plot->add_option("--in", plot_in, "input CSV")->required();
    c_plot->add_option("--out", plot_out, "output SVG")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("uavbeam");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_generate->parsed()) {
            return cmd_generate(out, common, gen_out, gen_count);
        }
        if (c_train->parsed()) {
            return cmd_train(out, common, train_traj, train_epochs, train_batch, train_lr,
                             train_h1, train_h2, train_out, train_loss);
        }
        if (c_gradcheck->parsed()) {
            return cmd_gradcheck(out, gc_seed, gc_eps, gc_models, gc_windows, gc_samples,
                                 gc_skip_full);
        }
        if (c_simulate->parsed()) {
            return cmd_simulate(out, common, sim_model, sim_prefix, sim_kmode);
        }
        if (c_failover->parsed()) {
            return cmd_failover(out, common, fo_model, fo_start, fo_len, fo_prefix);
        }
        if (c_compare->parsed()) {
            return cmd_compare(out, common, cmp_model, cmp_episodes, cmp_dir, cmp_kmode);
        }
        if (c_plot->parsed()) {
            render_plot(plot_in, plot_out);
            out << "wrote " << plot_out << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    err << "no subcommand given\n";
    return 1;
}

}  // namespace uavbeam::cli
