// Command-line front end: run, oracle, synth, image, knn-cache.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "snapcp/error.hpp"
#include "snapcp/graph.hpp"
#include "snapcp/harness.hpp"
#include "snapcp/matrixio.hpp"
#include "snapcp/report.hpp"

namespace {

using namespace snapcp;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

ReportFormat parse_format(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    throw ValidationError("unknown report format '" + s + "'");
}

void print_summary(const std::string& label, const TrialReport& r) {
    const auto& a = r.aggregate;
    std::cout << fmt::format("{:<8} trials={} coverage={:.4f} size={:.4f} sh={:.4f} sscv={:.4f}\n", label,
                             a.n_trials, a.coverage.mean, a.size.mean, a.sh.mean, a.sscv.mean);
}

struct RunArgs {
    std::string manifest;
    std::string method = "snaps";
    std::string base = "aps";
    double alpha = 0.05;
    std::size_t splits = 10;
    std::size_t trials = 100;
    std::size_t k = 20;
    std::optional<std::size_t> sample_m;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";
    double grid_step = 0.05;
    std::optional<std::size_t> calib_size;
    std::optional<double> lambda;
    std::optional<double> mu;
    std::string knn_cache;
    bool renormalize = false;
};

int cmd_run(const RunArgs& a) {
    const auto bundle = load_bundle(a.manifest, {a.renormalize});
    ExperimentConfig cfg;
    cfg.alpha = a.alpha;
    cfg.method = parse_method(a.method);
    if (a.base == "aps") {
        cfg.base = BaseScore::aps;
    } else if (a.base == "raps") {
        cfg.base = BaseScore::raps;
    } else {
        throw ValidationError("base must be aps or raps");
    }
    cfg.knn.k = a.k;
    cfg.knn.sample_size = a.sample_m;
    cfg.knn.seed = a.seed;
    cfg.grid_step = a.grid_step;
    cfg.n_model_splits = a.splits;
    cfg.n_conformal_splits = a.trials;
    cfg.seed = a.seed;
    if (a.calib_size) cfg.splits.calib_rule = CalibRule::fixed(*a.calib_size);
    if (a.lambda || a.mu) cfg.fixed_snaps = SnapsParams{a.lambda.value_or(0.0), a.mu.value_or(0.0)};

    std::optional<SparseGraph> knn;
    if (!a.knn_cache.empty() && cfg.needs_knn()) {
        const auto key = make_cache_key(bundle.features_path, cfg.knn);
        knn = read_knn_cache(a.knn_cache, key);
        if (!knn) {
            spdlog::info("k-NN cache miss; building and writing {}", a.knn_cache);
            knn = build_knn_graph(bundle.features, cfg.knn);
            write_knn_cache(*knn, key, a.knn_cache);
        }
    }
    const auto report = run_experiment(bundle, cfg, knn ? &*knn : nullptr);
    write_report(report, a.out, parse_format(a.format));
    print_summary(a.method, report);
    return 0;
}

std::vector<std::size_t> parse_sweep(const std::string& s) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            const auto v = std::stoull(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("bad m-sweep entry '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

LabelVector labels_for(const std::string& path, const DenseMatrix& probs) {
    LabelVector l;
    l.labels = load_labels(path);
    l.num_classes = probs.cols();
    l.validate();
    return l;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction sets for graph node classification"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Repeated split-conformal trials on a dataset bundle");
    run_cmd->add_option("--manifest", run.manifest, "Bundle manifest")->required();
    run_cmd->add_option("--method", run.method, "aps|raps|daps|snaps")
        ->check(CLI::IsMember({"aps", "raps", "daps", "snaps"}));
    run_cmd->add_option("--base", run.base, "Base score for daps/snaps")->check(CLI::IsMember({"aps", "raps"}));
    run_cmd->add_option("--alpha", run.alpha, "Significance level");
    run_cmd->add_option("--splits", run.splits, "Train/valid (model) splits");
    run_cmd->add_option("--trials", run.trials, "Calibration/test splits per model split");
    run_cmd->add_option("--k", run.k, "Neighbors in the similarity graph");
    run_cmd->add_option("--sample-m", run.sample_m, "Candidate pool size for sampled k-NN");
    run_cmd->add_option("--seed", run.seed, "Global seed");
    run_cmd->add_option("--out", run.out, "Report path")->required();
    run_cmd->add_option("--format", run.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    run_cmd->add_option("--grid-step", run.grid_step, "Lambda/mu grid step");
    run_cmd->add_option("--calib-size", run.calib_size, "Fixed calibration size instead of min(1000, pool/2)");
    run_cmd->add_option("--lambda", run.lambda, "Fix lambda (skips tuning)");
    run_cmd->add_option("--mu", run.mu, "Fix mu (skips tuning)");
    run_cmd->add_option("--knn-cache", run.knn_cache, "k-NN graph cache file (read, or written on miss)");
    run_cmd->add_flag("--renormalize", run.renormalize, "Rescale probability rows instead of rejecting them");

    std::string oracle_manifest, oracle_out, oracle_sweep = "0,1,2,4,8,16,32", oracle_format = "json";
    OracleConfig oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "Same-label aggregation with ground-truth labels");
    oracle_cmd->add_option("--manifest", oracle_manifest)->required();
    oracle_cmd->add_option("--alpha", oracle.alpha);
    oracle_cmd->add_option("--m-sweep", oracle_sweep, "Comma-separated node counts");
    oracle_cmd->add_option("--w", oracle.w, "Mixing weight");
    oracle_cmd->add_option("--splits", oracle.n_model_splits);
    oracle_cmd->add_option("--trials", oracle.n_conformal_splits);
    oracle_cmd->add_option("--seed", oracle.seed);
    oracle_cmd->add_option("--out", oracle_out)->required();
    oracle_cmd->add_option("--format", oracle_format)->check(CLI::IsMember({"json", "csv"}));

    SyntheticConfig synth;
    std::string synth_dir;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic planted-partition bundle");
    synth_cmd->add_option("--n", synth.n);
    synth_cmd->add_option("--classes", synth.classes);
    synth_cmd->add_option("--dim", synth.dim);
    synth_cmd->add_option("--homophily", synth.homophily);
    synth_cmd->add_option("--class-sep", synth.class_sep);
    synth_cmd->add_option("--noise", synth.noise);
    synth_cmd->add_option("--avg-degree", synth.avg_degree);
    synth_cmd->add_option("--feature-noise", synth.feature_noise);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--name", synth.name);
    synth_cmd->add_option("--out-dir", synth_dir)->required();

    ImageConfig image;
    std::string probs_calib, probs_test, feats_calib, feats_test, labels_calib, labels_test, image_out;
    auto* image_cmd = app.add_subcommand("image", "Graph-free correction from calibration-set neighbors");
    image_cmd->add_option("--probs-calib", probs_calib)->required();
    image_cmd->add_option("--probs-test", probs_test)->required();
    image_cmd->add_option("--feats-calib", feats_calib)->required();
    image_cmd->add_option("--feats-test", feats_test)->required();
    image_cmd->add_option("--labels-calib", labels_calib)->required();
    image_cmd->add_option("--labels-test", labels_test)->required();
    image_cmd->add_option("--k", image.k);
    image_cmd->add_option("--eta", image.eta);
    image_cmd->add_option("--alpha", image.alpha);
    image_cmd->add_option("--seed", image.seed);
    image_cmd->add_option("--out", image_out, "JSON with both reports");

    KnnConfig knn_cfg;
    std::string knn_features, knn_out;
    std::optional<std::size_t> knn_m;
    auto* knn_cmd = app.add_subcommand("knn-cache", "Build and store a cosine k-NN graph");
    knn_cmd->add_option("--features", knn_features)->required();
    knn_cmd->add_option("--k", knn_cfg.k);
    knn_cmd->add_option("--sample-m", knn_m);
    knn_cmd->add_option("--seed", knn_cfg.seed);
    knn_cmd->add_option("--out", knn_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*oracle_cmd) {
            oracle.m_sweep = parse_sweep(oracle_sweep);
            const auto reports = run_oracle_experiment(load_bundle(oracle_manifest), oracle);
            std::ofstream out(oracle_out, std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + oracle_out);
            if (oracle_format == "json") {
                auto arr = nlohmann::ordered_json::array();
                for (const auto& r : reports) arr.push_back(report_to_json(r));
                out << arr.dump(2) << '\n';
            } else {
                out << "m,coverage,size,sh,sscv\n";
                for (const auto& r : reports) {
                    const auto& a = r.aggregate;
                    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.config["m"].get<std::size_t>(),
                                       a.coverage.mean, a.size.mean, a.sh.mean, a.sscv.mean);
                }
            }
            for (const auto& r : reports) print_summary("m=" + r.config["m"].dump(), r);
            return 0;
        }
        if (*synth_cmd) {
            const auto bundle = generate_synthetic(synth);
            const auto manifest = write_bundle(bundle, synth_dir);
            std::cout << fmt::format("wrote {} (n={}, edges={}, homophily={:.3f})\n", manifest.string(),
                                     bundle.num_nodes(), bundle.arcs.size() / 2, edge_homophily(bundle));
            return 0;
        }
        if (*image_cmd) {
            const auto pc = load_matrix(probs_calib, format_from_path(probs_calib));
            const auto pt = load_matrix(probs_test, format_from_path(probs_test));
            const auto fc = load_matrix(feats_calib, format_from_path(feats_calib));
            const auto ft = load_matrix(feats_test, format_from_path(feats_test));
            const auto reports =
                run_image_fixed(pc, fc, labels_for(labels_calib, pc), pt, ft, labels_for(labels_test, pt), image);
            print_summary("aps", reports.aps);
            print_summary("snaps", reports.snaps);
            if (!image_out.empty()) {
                std::ofstream out(image_out, std::ios::trunc);
                if (!out) throw std::runtime_error("cannot write " + image_out);
                out << nlohmann::ordered_json{{"aps", report_to_json(reports.aps)},
                                              {"snaps", report_to_json(reports.snaps)}}
                           .dump(2)
                    << '\n';
            }
            return 0;
        }
        if (*knn_cmd) {
            knn_cfg.sample_size = knn_m;
            const auto features = load_matrix(knn_features, format_from_path(knn_features));
            const auto g = build_knn_graph(features, knn_cfg);
            write_knn_cache(g, make_cache_key(knn_features, knn_cfg), knn_out);
            std::cout << fmt::format("wrote {} ({} nodes, {} arcs)\n", knn_out, g.num_nodes(), g.num_arcs());
            return 0;
        }
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return 0;
}
