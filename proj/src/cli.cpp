#include "otalign/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "otalign/config.hpp"
#include "otalign/io.hpp"
#include "otalign/metrics.hpp"
#include "otalign/trainer.hpp"

namespace otalign::cli {

namespace {

const char* kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse:
            return "parse";
        case ErrorKind::Range:
            return "range";
        case ErrorKind::Shape:
            return "shape";
        case ErrorKind::Config:
            return "config";
        case ErrorKind::Numerical:
            return "numerical";
        case ErrorKind::Checkpoint:
            return "checkpoint";
        case ErrorKind::Io:
            return "io";
        case ErrorKind::InvalidArgument:
            return "invalid-argument";
    }
    return "unknown";
}

int report(std::ostream& err, const std::string& stage, ErrorKind kind, const std::string& message) {
    nlohmann::json j{{"error", {{"stage", stage}, {"kind", kind_name(kind)}, {"message", message}}}};
    err << j.dump() << '\n';
    return exit_code_for(kind);
}

// Runs `body`, mapping exceptions to a structured message and exit code.
template <class Body>
int guarded(std::ostream& err, std::string& stage, Body body) {
    try {
        return body();
    } catch (const Error& e) {
        return report(err, stage, e.kind(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report(err, stage, ErrorKind::Io, e.what());
    } catch (const std::bad_alloc&) {
        return report(err, stage, ErrorKind::Numerical, "out of memory");
    }
}

std::filesystem::path fresh_run_dir(const RunConfig& cfg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << cfg.mode << "-seed" << cfg.train.seed << '-' << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    auto dir = cfg.output_dir / name.str();
    for (int suffix = 2; std::filesystem::exists(dir); ++suffix) {
        dir = cfg.output_dir / (name.str() + "-" + std::to_string(suffix));
    }
    std::filesystem::create_directories(dir);
    return dir;
}

nlohmann::json metrics_json(const AlignmentMetrics& m) {
    nlohmann::json j;
    for (const auto& [k, v] : m.hits) {
        j["hits"][std::to_string(k)] = v;
    }
    j["mrr"] = m.mrr;
    return j;
}

void print_metrics(std::ostream& out, const AlignmentMetrics& m, const std::string& suffix = "") {
    out << std::setprecision(6);
    for (const auto& [k, v] : m.hits) {
        out << "Hits@" << k << suffix << '\t' << v << '\n';
    }
    out << "MRR" << suffix << '\t' << m.mrr << '\n';
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
            return kExitConfig;
        case ErrorKind::Numerical:
            return kExitNumerical;
        default:
            return kExitData;
    }
}

int cmd_align(const AlignArgs& args, std::ostream& out, std::ostream& err) {
    using Clock = std::chrono::steady_clock;
    std::string stage = "config";
    return guarded(err, stage, [&] {
        const auto t0 = Clock::now();
        RunConfig cfg = load_config(args.config);
        if (args.mode) {
            cfg.set_mode(*args.mode);
        }
        cfg.snapshot["mode"] = cfg.mode;
        Eigen::setNbThreads(std::max(args.threads, 1));

        stage = "load";
        Dataset data = load_dataset(cfg.data);
        if (cfg.mode == "noise" && cfg.noise_p > 0.0) {
            stage = "noise";
            data.g2 = inject_noise(data.g2, cfg.noise_kind, cfg.noise_p,
                                   split_seed(cfg.train.seed, seed_stream::kNoise));
        }

        stage = "split";
        auto [train_set, test_set] =
            split_anchors(data.anchors, cfg.train_ratio, split_seed(cfg.train.seed, seed_stream::kAnchorSplit));
        const auto t_loaded = Clock::now();

        stage = "output";
        const auto run_dir = fresh_run_dir(cfg);
        std::filesystem::create_directories(run_dir / "traces");
        cfg.train.trace_dir = run_dir / "traces";
        write_anchors(train_set, run_dir / "train_anchors.txt");
        write_anchors(test_set, run_dir / "test_anchors.txt");
        if (cfg.mode == "noise") {
            write_edge_list(data.g2, run_dir / "edges2_perturbed.txt");
        }

        stage = "train";
        TrainResult result = train(cfg.train, data.g1, data.g2, train_set, &test_set);
        const auto t_trained = Clock::now();

        stage = "evaluate";
        const std::vector<int> ks{1, 5, 10, 30};
        const AlignmentMetrics metrics = evaluate_plan(result.plan.values, test_set, ks);
        const AlignmentMetrics pessimistic =
            evaluate_plan(result.plan.values, test_set, ks, TieRule::Pessimistic);

        stage = "write";
        write_plan(result.plan.values, run_dir / "plan.bin");
        write_model({result.params, result.lambda}, run_dir / "model.bin");
        if (cfg.train.mode == TrainMode::FixedCost) {
            write_matrix_csv(result.features1.values, run_dir / "embeddings_g1.csv");
            write_matrix_csv(result.features2.values, run_dir / "embeddings_g2.csv");
        } else {
            write_matrix_csv(encode(result.params, result.features1), run_dir / "embeddings_g1.csv");
            write_matrix_csv(encode(result.params, result.features2), run_dir / "embeddings_g2.csv");
        }
        result.history.write_csv(run_dir / "history.csv");
        write_metrics_text(metrics, run_dir / "metrics.txt");
        nlohmann::json metrics_doc = metrics_json(metrics);
        metrics_doc["pessimistic"] = metrics_json(pessimistic);
        metrics_doc["lambda"] = result.lambda;
        metrics_doc["count"] = metrics.count;
        write_file_atomic(run_dir / "metrics.json", metrics_doc.dump(2) + "\n");

        nlohmann::json inputs;
        auto add_input = [&](const std::string& key, const std::filesystem::path& p) {
            inputs[key] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
        };
        add_input("edges1", cfg.data.edges1);
        add_input("edges2", cfg.data.edges2);
        add_input("anchors", cfg.data.anchors);
        if (cfg.data.attrs1) {
            add_input("attrs1", *cfg.data.attrs1);
            add_input("attrs2", *cfg.data.attrs2);
        }
        const auto t_done = Clock::now();
        auto seconds = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
        nlohmann::json manifest{
            {"config", cfg.snapshot},
            {"config_path", std::filesystem::absolute(args.config).string()},
            {"mode", cfg.mode},
            {"seed", cfg.train.seed},
            {"seed_rule", "component seed = splitmix64(root + 0x9e3779b97f4a7c15 * (stream + 1)); "
                          "streams: anchor split 1, encoder init 2, noise 3, minibatch 4"},
            {"threads", args.threads},
            {"inputs", inputs},
            {"outputs",
             {"plan.bin", "model.bin", "embeddings_g1.csv", "embeddings_g2.csv", "history.csv",
              "metrics.txt", "metrics.json", "train_anchors.txt", "test_anchors.txt", "traces/"}},
            {"timing_seconds",
             {{"load", seconds(t0, t_loaded)}, {"train", seconds(t_loaded, t_trained)},
              {"total", seconds(t0, t_done)}}},
            {"warnings", result.history.warnings},
            {"metrics", metrics_json(metrics)},
        };
        write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");

        out << "run directory\t" << run_dir.string() << '\n';
        print_metrics(out, metrics);
        return kExitOk;
    });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    std::string stage = "load";
    return guarded(err, stage, [&] {
        const Matrix plan = read_plan(args.plan);
        AnchorSet test = read_anchors(args.anchors);
        stage = "evaluate";
        const AlignmentMetrics metrics = evaluate_plan(plan, test, args.ks);
        print_metrics(out, metrics);
        std::optional<AlignmentMetrics> pessimistic;
        if (args.pessimistic) {
            pessimistic = evaluate_plan(plan, test, args.ks, TieRule::Pessimistic);
            print_metrics(out, *pessimistic, " (pessimistic)");
        }

        stage = "write";
        const auto dir = args.out_dir.value_or(args.plan.parent_path());
        if (!dir.empty()) {
            std::filesystem::create_directories(dir);
        }
        write_metrics_text(metrics, dir / "evaluation.txt");
        nlohmann::json doc = metrics_json(metrics);
        doc["count"] = metrics.count;
        if (pessimistic) {
            doc["pessimistic"] = metrics_json(*pessimistic);
        }
        write_file_atomic(dir / "evaluation.json", doc.dump(2) + "\n");
        return kExitOk;
    });
}

int cmd_perturb(const PerturbArgs& args, std::ostream& out, std::ostream& err) {
    std::string stage = "load";
    return guarded(err, stage, [&] {
        if (args.kind == NoiseKind::Structural) {
            const Graph g = load_graph(args.in, std::nullopt);
            stage = "perturb";
            const Graph noisy = inject_noise(g, args.kind, args.percent, args.seed);
            stage = "write";
            write_edge_list(noisy, args.out);
            out << "flipped\t" << noise_flip_count(g, args.kind, args.percent) << '\n';
        } else {
            Matrix attrs = read_attributes(args.in);
            const Index n = attrs.rows();
            const Graph g = Graph::from_edges(n, {}, std::move(attrs));
            stage = "perturb";
            const Graph noisy = inject_noise(g, args.kind, args.percent, args.seed);
            stage = "write";
            write_attributes(noisy.attributes(), args.out);
            out << "flipped\t" << noise_flip_count(g, args.kind, args.percent) << '\n';
        }
        return kExitOk;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Network alignment by joint optimal transport and embedding learning"};
    app.require_subcommand(1);

    AlignArgs align;
    std::string mode;
    auto* align_cmd = app.add_subcommand("align", "Train on a dataset described by a config file");
    align_cmd->add_option("--config", align.config, "JSON run configuration")->required();
    align_cmd->add_option("--mode", mode, "full | fixed-cost | collapse | noise")
        ->check(CLI::IsMember({"full", "fixed-cost", "collapse", "noise"}));
    align_cmd->add_option("--threads", align.threads, "Threads for matrix kernels");

    EvaluateArgs evaluate;
    std::string ks = "1,10";
    std::string eval_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a plan checkpoint against test anchors");
    eval_cmd->add_option("--plan", evaluate.plan, "Plan checkpoint")->required();
    eval_cmd->add_option("--anchors", evaluate.anchors, "Test anchor file")->required();
    eval_cmd->add_option("--k", ks, "Comma-separated K values for Hits@K");
    eval_cmd->add_flag("--pessimistic", evaluate.pessimistic, "Also report ranks counting ties");
    eval_cmd->add_option("--out", eval_out, "Directory for evaluation files (default: plan's)");

    PerturbArgs perturb;
    std::string kind;
    auto* perturb_cmd = app.add_subcommand("perturb", "Inject structural or attribute noise");
    perturb_cmd->add_option("--in", perturb.in, "Edge list (structural) or attribute CSV")->required();
    perturb_cmd->add_option("--kind", kind, "structural | attribute")
        ->required()
        ->check(CLI::IsMember({"structural", "attribute"}));
    perturb_cmd->add_option("--p", perturb.percent, "Percent of entries to flip")->required();
    perturb_cmd->add_option("--seed", perturb.seed, "Random seed")->required();
    perturb_cmd->add_option("--out", perturb.out, "Output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*align_cmd) {
        if (!mode.empty()) {
            align.mode = mode;
        }
        return cmd_align(align, out, err);
    }
    if (*eval_cmd) {
        evaluate.ks.clear();
        std::stringstream ss(ks);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                evaluate.ks.push_back(std::stoi(item));
            } catch (const std::exception&) {
                return report(err, "arguments", ErrorKind::Config, "bad --k value '" + item + "'");
            }
        }
        if (!eval_out.empty()) {
            evaluate.out_dir = eval_out;
        }
        return cmd_evaluate(evaluate, out, err);
    }
    perturb.kind = kind == "attribute" ? NoiseKind::Attribute : NoiseKind::Structural;
    return cmd_perturb(perturb, out, err);
}

}  // namespace otalign::cli
