// penny: generate rolling-penny datasets, learn horizontal vector fields,
// and export evaluation tables.
//
//   penny generate --seed 1 --out data
//   penny train    --seed 2 --dataset data --group s1r2 --out run_s1r2
//   penny eval     --weights run_s1r2/weights.txt --group s1r2 --dataset data --out eval_s1r2
//
// Options may also come from a key = value config file (`--config FILE`,
// given before the subcommand); command-line flags take precedence.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "penny/diagnostics.hpp"
#include "penny/dynamics.hpp"
#include "penny/evaluation.hpp"
#include "penny/io.hpp"
#include "penny/learner.hpp"

namespace fs = std::filesystem;
using namespace penny;

namespace {

struct GridOptions {
    std::size_t phi_points = 64;
    std::size_t xy_points = 16;
    double xy_half_width = 2.0;
};

std::vector<Config> eval_grid(GroupAction group, const GridOptions& g) {
    if (group == GroupAction::s1r2) return phi_grid(g.phi_points);
    const double phis[] = {0.0};
    return xy_grid(g.xy_points, -g.xy_half_width, g.xy_half_width, phis);
}

bool all_finite(const nlohmann::json& j) {
    if (j.is_number_float()) return std::isfinite(j.get<double>());
    if (j.is_structured()) {
        for (const auto& v : j) {
            if (!all_finite(v)) return false;
        }
    }
    return true;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    auto out = io::open_for_write(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json metrics_json(const FieldMetrics& m) {
    return {{"mean_abs_f2", m.mean_abs_f2},
            {"mean_abs_f3", m.mean_abs_f3},
            {"lie_rms_error", m.lie_rms_error},
            {"max_section_angle", m.max_section_angle},
            {"mean_section_angle", m.mean_section_angle},
            {"vertical_residual", m.vertical_residual}};
}

int run_generate(const DatasetConfig& cfg, const PennyParams& penny, const fs::path& out,
                 unsigned workers) {
    const std::vector<Trajectory> data = generate_dataset(cfg, penny, workers);
    io::write_dataset(out, cfg, penny, data);
    std::cout << "wrote " << data.size() << " trajectories x " << data.front().size()
              << " samples to " << out.string() << '\n';
    return 0;
}

int run_train(const fs::path& dataset, const TrainConfig& cfg, const GridOptions& grid,
              const fs::path& out) {
    io::DatasetManifest manifest;
    const std::vector<Trajectory> data = io::load_dataset(dataset, &manifest);
    const TrainResult result = train(data, cfg);

    fs::create_directories(out);
    io::save_weights(out / "weights.txt", result.weights);
    {
        auto loss_out = io::open_for_write(out / "loss.csv");
        loss_out << "epoch,loss\n";
        for (std::size_t e = 0; e < result.report.loss_history.size(); ++e) {
            loss_out << e << ',' << io::format_double(result.report.loss_history[e]) << '\n';
        }
        if (!loss_out) throw std::runtime_error("write failed: loss.csv");
    }

    const std::vector<Config> qs = eval_grid(cfg.group, grid);
    const FieldMetrics m = evaluate_field(result.weights, manifest.penny, cfg.group, qs);
    const nlohmann::json metrics = {
        {"group", std::string(to_string(cfg.group))},
        {"epochs", cfg.epochs},
        {"learning_rate", cfg.learning_rate},
        {"batch_size", cfg.batch_size},
        {"seed", cfg.seed},
        {"samples_used", result.report.samples_used},
        {"samples_dropped", result.report.samples_dropped},
        {"initial_loss", result.report.loss_history.front()},
        {"final_loss", result.report.final_loss},
        {"train_vertical_residual_initial", result.report.initial_vertical_residual},
        {"train_vertical_residual_final", result.report.final_vertical_residual},
        {"grid", metrics_json(m)}};
    write_json(out / "metrics.json", metrics);

    std::cout << "trained " << to_string(cfg.group) << " for " << cfg.epochs << " epochs in "
              << result.report.wall_seconds << " s; final loss "
              << io::format_double(result.report.final_loss) << ", vertical residual "
              << io::format_double(m.vertical_residual) << '\n';
    return all_finite(metrics) ? 0 : 1;
}

int run_eval(const fs::path& weights_path, GroupAction group, const fs::path& dataset,
             const GridOptions& grid, const fs::path& out) {
    const ModelWeights w = io::load_weights(weights_path);
    if (w.dims().front() != 4 || w.dims().back() != 3) {
        throw FormatError("weights file: model must map 4 inputs to 3 outputs");
    }

    PennyParams penny;
    Trajectory reference;
    if (!dataset.empty()) {
        io::DatasetManifest manifest;
        std::vector<Trajectory> data = io::load_dataset(dataset, &manifest);
        penny = manifest.penny;
        reference = std::move(data.front());
    } else {
        reference = sample_explicit(penny, TrajectoryParams{1.0, 1.0, 0.0, 0.0, 0.0, 0.0}, 0.01,
                                    2000);
    }

    fs::create_directories(out);
    const std::vector<Config> qs = eval_grid(group, grid);
    const std::vector<Vec3> f = field_on(w, qs);
    const std::vector<LieAlgebraElement> xi = recover_lie_algebra(w, group, qs);

    {
        auto field = io::open_for_write(out / "field.csv");
        field << "theta,phi,x,y,f1,f2,f3\n";
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const Config& q = qs[i];
            field << io::format_double(q.theta) << ',' << io::format_double(q.phi) << ','
                  << io::format_double(q.x) << ',' << io::format_double(q.y);
            for (double v : f[i]) field << ',' << io::format_double(v);
            field << '\n';
        }
        if (!field) throw std::runtime_error("write failed: field.csv");
    }
    {
        auto lie = io::open_for_write(out / "lie_algebra.csv");
        lie << "theta,phi,x,y,xi1,xi2,xi3,ref1,ref2,ref3\n";
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const Config& q = qs[i];
            const LieAlgebraElement ref = expected_lie_algebra(group, penny, q);
            lie << io::format_double(q.theta) << ',' << io::format_double(q.phi) << ','
                << io::format_double(q.x) << ',' << io::format_double(q.y);
            for (double v : xi[i].xi) lie << ',' << io::format_double(v);
            for (double v : ref.xi) lie << ',' << io::format_double(v);
            lie << '\n';
        }
        if (!lie) throw std::runtime_error("write failed: lie_algebra.csv");
    }

    MlpWorkspace ws(w);
    const MomentumSeries learned = momentum_equation_residual(
        penny, reference,
        [&](const Config& q) { return pullback(group, q, forward(w, q, ws)); }, group);
    const MomentumSeries exact = momentum_equation_residual(
        penny, reference, [&](const Config& q) { return expected_lie_algebra(group, penny, q); },
        group);
    {
        auto r1 = io::open_for_write(out / "residual_learned.csv");
        io::write_series_csv(r1, learned);
        auto r2 = io::open_for_write(out / "residual_exact.csv");
        io::write_series_csv(r2, exact);
        if (!r1 || !r2) throw std::runtime_error("write failed: residual CSVs");
    }

    const FieldMetrics m = evaluate_field(w, penny, group, qs);
    nlohmann::json metrics = metrics_json(m);
    metrics["group"] = std::string(to_string(group));
    metrics["grid_points"] = qs.size();
    metrics["residual_learned_max"] = learned.max_abs();
    metrics["residual_exact_max"] = exact.max_abs();
    write_json(out / "metrics.json", metrics);

    std::cout << "evaluated " << qs.size() << " grid points; lie rms error "
              << io::format_double(m.lie_rms_error) << '\n';
    bool finite = all_finite(metrics);
    for (const Vec3& v : f) finite = finite && std::isfinite(v[0] + v[1] + v[2]);
    return finite ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rolling penny: data generation, horizontal-field learning, evaluation"};
    app.set_config("--config", "", "key = value config file; command-line flags win");
    app.require_subcommand(1);

    // generate
    DatasetConfig dcfg;
    PennyParams penny;
    std::string gen_out = "dataset";
    unsigned gen_workers = 1;
    auto* gen = app.add_subcommand("generate", "sample closed-form trajectories to CSV");
    gen->add_option("--seed", dcfg.seed, "master RNG seed")->required();
    gen->add_option("--n-traj", dcfg.n_trajectories, "number of trajectories")->capture_default_str();
    gen->add_option("--t-end", dcfg.t_end, "duration [s]")->capture_default_str();
    gen->add_option("--dt", dcfg.dt, "sample step [s]")->capture_default_str();
    gen->add_option("--radius", dcfg.radius, "penny radius R [m]")->capture_default_str();
    gen->add_option("--mass", penny.mass, "mass m [kg]")->capture_default_str();
    gen->add_option("--inertia-roll", penny.inertia_roll, "I [kg m^2]")->capture_default_str();
    gen->add_option("--inertia-yaw", penny.inertia_yaw, "J [kg m^2]")->capture_default_str();
    gen->add_option("--center-range", dcfg.x0.hi, "x0, y0 drawn from [-r, r]")->capture_default_str();
    gen->add_option("--workers", gen_workers, "worker threads")->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();

    // train
    TrainConfig tcfg;
    std::string train_group = "s1r2";
    std::string train_dataset;
    std::string train_out = "run";
    GridOptions grid;
    auto* tr = app.add_subcommand("train", "fit the horizontal field for one group action");
    tr->add_option("--seed", tcfg.seed, "initialization / shuffling seed")->required();
    tr->add_option("--dataset", train_dataset, "dataset directory")->required();
    tr->add_option("--group", train_group, "se2 | s1r2")
        ->check(CLI::IsMember({"se2", "s1r2"}))
        ->capture_default_str();
    tr->add_option("--epochs", tcfg.epochs, "training epochs")->capture_default_str();
    tr->add_option("--lr", tcfg.learning_rate, "Adam learning rate")->capture_default_str();
    tr->add_option("--batch-size", tcfg.batch_size, "mini-batch size, 0 = full batch")
        ->capture_default_str();
    tr->add_option("--workers", tcfg.workers, "worker threads")->capture_default_str();
    tr->add_option("--out", train_out, "output directory")->capture_default_str();

    // eval
    std::string eval_weights;
    std::string eval_group = "s1r2";
    std::string eval_dataset;
    std::string eval_out = "eval";
    auto* ev = app.add_subcommand("eval", "export field, Lie algebra and residual tables");
    ev->add_option("--weights", eval_weights, "weights file")->required();
    ev->add_option("--group", eval_group, "se2 | s1r2")
        ->check(CLI::IsMember({"se2", "s1r2"}))
        ->capture_default_str();
    ev->add_option("--dataset", eval_dataset, "dataset for R and the residual trajectory");
    ev->add_option("--phi-points", grid.phi_points, "phi grid size (s1r2)")->capture_default_str();
    ev->add_option("--xy-points", grid.xy_points, "points per side of the (x, y) grid (se2)")
        ->capture_default_str();
    ev->add_option("--xy-range", grid.xy_half_width, "(x, y) grid spans [-r, r]^2")
        ->capture_default_str();
    ev->add_option("--out", eval_out, "output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            dcfg.x0 = {-dcfg.x0.hi, dcfg.x0.hi};
            dcfg.y0 = dcfg.x0;
            return run_generate(dcfg, penny, gen_out, gen_workers);
        }
        if (*tr) {
            tcfg.group = parse_group(train_group);
            return run_train(train_dataset, tcfg, grid, train_out);
        }
        if (*ev) {
            if (grid.phi_points == 0 || grid.xy_points == 0) {
                throw InvalidArgument("grid sizes must be >= 1");
            }
            return run_eval(eval_weights, parse_group(eval_group), eval_dataset, grid, eval_out);
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
