#include "excitation/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "excitation/errors.hpp"
#include "excitation/excitation.hpp"
#include "excitation/metrics.hpp"

#ifdef EXC_HAVE_OPENMP
#include <omp.h>
#endif

namespace exc {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

std::string csv_header(std::size_t layers) {
    std::string h = "run_id,seed,epoch,step,split,loss,accuracy,lr";
    for (std::size_t l = 0; l < layers; ++l) {
        const auto s = std::to_string(l);
        h += ",entropy_" + s + ",specialization_" + s + ",phi_min_" + s + ",phi_mean_" + s + ",phi_max_" + s;
    }
    return h;
}

std::string csv_row(const RunRecord& r) {
    std::string row = r.run_id + "," + std::to_string(r.seed) + "," + std::to_string(r.epoch) + "," +
                      std::to_string(r.step) + "," + r.split + "," + format_number(r.loss) + "," +
                      format_number(r.accuracy) + "," + format_number(r.lr);
    for (std::size_t l = 0; l < r.entropy.size(); ++l) {
        row += "," + format_number(r.entropy[l]) + "," + format_number(r.specialization[l]) + "," +
               format_number(r.phi_min[l]) + "," + format_number(r.phi_mean[l]) + "," +
               format_number(r.phi_max[l]);
    }
    return row;
}

DataSplits load_data(const ExperimentConfig& config) {
    if (config.dataset == "cifar10") {
        if (config.data_dir.empty()) throw ConfigError("cifar10 needs a data directory (--data-dir or data_dir)");
        return load_cifar10(config.data_dir);
    }
    return synth_splits(config.synth_seed, config.synth_train, config.synth_test, config.model.input_dim,
                        config.model.classes, config.synth_spread);
}

namespace {

constexpr std::size_t kEvalChunk = 1000;

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<double> entropy;
    std::vector<double> specialization;
};

Evaluation evaluate(const ModelParams& params, const ModelConfig& model, const Dataset& data) {
    Evaluation ev;
    ev.entropy.assign(model.depth, 0.0);
    SpecializationAccumulator spec(model.depth, model.width, model.classes);
    std::size_t correct = 0;
    double loss_sum = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
        const std::size_t end = std::min(data.size(), start + kEvalChunk);
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const Matrix x = gather_rows(data.features, idx);
        const auto y = gather(data.labels, idx);
        const auto fwd = forward(params, x, model);
        const auto loss = softmax_cross_entropy(fwd.logits, y);
        const double rows = static_cast<double>(idx.size());
        loss_sum += loss.loss * rows;
        correct += correct_count(fwd.logits, y);
        for (std::size_t l = 0; l < model.depth; ++l)
            ev.entropy[l] += mean_routing_entropy(fwd.activation.pre_activations[l]) * rows;
        spec.add(fwd.activation, y);
    }
    const double n = static_cast<double>(std::max<std::size_t>(data.size(), 1));
    ev.loss = loss_sum / n;
    ev.accuracy = static_cast<double>(correct) / n;
    for (double& h : ev.entropy) h /= n;
    for (std::size_t l = 0; l < model.depth; ++l)
        ev.specialization.push_back(specialization_score(spec.counts(l), model.width, model.classes)
                                        .value_or(std::numeric_limits<double>::quiet_NaN()));
    return ev;
}

/// Training-stream statistics between two evaluation points.
class TrainWindow {
public:
    explicit TrainWindow(const ModelConfig& model) : model_(model), spec_(model.depth, model.width, model.classes) {
        reset();
    }

    void reset() {
        rows_ = 0;
        correct_ = 0;
        loss_sum_ = 0.0;
        steps_ = 0;
        entropy_.assign(model_.depth, 0.0);
        phi_min_.assign(model_.depth, std::numeric_limits<double>::infinity());
        phi_max_.assign(model_.depth, -std::numeric_limits<double>::infinity());
        phi_mean_.assign(model_.depth, 0.0);
        spec_ = SpecializationAccumulator(model_.depth, model_.width, model_.classes);
    }

    void add_batch(const ForwardOutput& fwd, std::span<const std::int32_t> labels, double loss) {
        const double rows = static_cast<double>(labels.size());
        rows_ += labels.size();
        loss_sum_ += loss * rows;
        correct_ += correct_count(fwd.logits, labels);
        for (std::size_t l = 0; l < model_.depth; ++l)
            entropy_[l] += mean_routing_entropy(fwd.activation.pre_activations[l]) * rows;
        spec_.add(fwd.activation, labels);
    }

    void add_coefficients(const Coefficients* phi) {
        ++steps_;
        for (std::size_t l = 0; l < model_.depth; ++l) {
            double lo = 1.0, hi = 1.0, mean = 1.0;
            if (phi) {
                const auto& p = (*phi)[l];
                lo = *std::min_element(p.begin(), p.end());
                hi = *std::max_element(p.begin(), p.end());
                double s = 0.0;
                for (double v : p) s += v;
                mean = s / static_cast<double>(p.size());
            }
            phi_min_[l] = std::min(phi_min_[l], lo);
            phi_max_[l] = std::max(phi_max_[l], hi);
            phi_mean_[l] += mean;
        }
    }

    bool empty() const noexcept { return rows_ == 0; }

    void fill_phi(RunRecord& r) const {
        r.phi_min = phi_min_;
        r.phi_max = phi_max_;
        r.phi_mean = phi_mean_;
        for (double& m : r.phi_mean) m = steps_ ? m / static_cast<double>(steps_) : 1.0;
        if (steps_ == 0) {
            std::fill(r.phi_min.begin(), r.phi_min.end(), 1.0);
            std::fill(r.phi_max.begin(), r.phi_max.end(), 1.0);
        }
    }

    void fill_train(RunRecord& r) const {
        const double n = static_cast<double>(std::max<std::size_t>(rows_, 1));
        r.loss = loss_sum_ / n;
        r.accuracy = static_cast<double>(correct_) / n;
        r.entropy = entropy_;
        for (double& h : r.entropy) h /= n;
        r.specialization.clear();
        for (std::size_t l = 0; l < model_.depth; ++l)
            r.specialization.push_back(specialization_score(spec_.counts(l), model_.width, model_.classes)
                                           .value_or(std::numeric_limits<double>::quiet_NaN()));
    }

private:
    ModelConfig model_;
    SpecializationAccumulator spec_;
    std::size_t rows_ = 0;
    std::size_t correct_ = 0;
    double loss_sum_ = 0.0;
    std::size_t steps_ = 0;
    std::vector<double> entropy_;
    std::vector<double> phi_min_, phi_mean_, phi_max_;
};

std::uint64_t hash_params(const ModelParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : p.tensors) h = fnv1a64(t.data(), t.size() * sizeof(double), h);
    return h;
}

}  // namespace

RunResult train_run(const ExperimentConfig& config, const DataSplits& data, std::uint64_t seed,
                    const RunOptions& options) {
    config.validate();
    const ModelConfig& model = config.model;
    if (data.train.dim() != model.input_dim || data.test.dim() != model.input_dim)
        throw ConfigError("dataset dimension does not match input_dim");
    if (data.train.size() == 0) throw InputError("empty training set");

    RunResult result;
    result.run_id = options.run_id.empty() ? "seed" + std::to_string(seed) : options.run_id;
    result.seed = seed;

    ModelParams params = init_params(model, seed);
    result.initial_params_hash = hash_params(params);
    result.batch_sequence_hash = 0xcbf29ce484222325ULL;

    OptimizerState state;
    Excitation excitation(config.excitation, mix_seed(seed, 0xB0057));
    const auto partition = expert_partitions(model);
    const BatchPlan plan{seed, config.batch_size};
    const std::uint64_t steps_per_epoch = (data.train.size() + config.batch_size - 1) / config.batch_size;
    const ScheduleConfig schedule{config.schedule, steps_per_epoch * config.total_epochs, config.optimizer.lr};

    std::ofstream csv;
    if (options.csv_path) {
        if (options.csv_path->has_parent_path()) std::filesystem::create_directories(options.csv_path->parent_path());
        csv.open(*options.csv_path, std::ios::trunc);
        if (!csv) throw IoError("cannot write " + options.csv_path->string());
        csv << csv_header(model.depth) << '\n';
        csv.flush();
    }

    TrainWindow window(model);
    std::uint64_t step = 0;
    double last_lr = lr_at(schedule, 0);
    std::uint64_t last_eval_step = std::numeric_limits<std::uint64_t>::max();

    auto emit = [&](std::uint64_t epoch) {
        RunRecord train_row;
        train_row.run_id = result.run_id;
        train_row.seed = seed;
        train_row.epoch = epoch;
        train_row.step = step;
        train_row.split = "train";
        train_row.lr = last_lr;
        window.fill_train(train_row);
        window.fill_phi(train_row);

        const auto ev = evaluate(params, model, data.test);
        RunRecord dev_row = train_row;
        dev_row.split = "dev";
        dev_row.loss = ev.loss;
        dev_row.accuracy = ev.accuracy;
        dev_row.entropy = ev.entropy;
        dev_row.specialization = ev.specialization;
        result.final_dev_accuracy = ev.accuracy;
        result.final_dev_loss = ev.loss;

        if (csv.is_open()) {
            csv << csv_row(train_row) << '\n' << csv_row(dev_row) << '\n';
            csv.flush();
        }
        result.records.push_back(std::move(train_row));
        result.records.push_back(std::move(dev_row));
        window.reset();
        last_eval_step = step;
    };

    bool stop = false;
    for (std::uint64_t epoch = 0; epoch < config.total_epochs && !stop; ++epoch) {
        for (const auto& batch : batches(plan, data.train.size(), epoch)) {
            result.batch_sequence_hash =
                fnv1a64(batch.data(), batch.size() * sizeof(std::size_t), result.batch_sequence_hash);
            const Matrix x = gather_rows(data.train.features, batch);
            const auto y = gather(data.train.labels, batch);
            const auto fwd = forward(params, x, model);
            const auto loss = softmax_cross_entropy(fwd.logits, y);
            if (!std::isfinite(loss.loss)) {
                result.diverged = true;
                result.divergence = "non-finite loss at step " + std::to_string(step);
                stop = true;
                break;
            }
            const TensorSet grads = backward(params, model, fwd, loss.grad_logits);
            last_lr = lr_at(schedule, step);
            UpdateDelta delta;
            try {
                delta = propose_delta(state, config.optimizer, grads, params.tensors, last_lr);
            } catch (const NumericError& e) {
                result.diverged = true;
                result.divergence = e.what();
                stop = true;
                break;
            }
            window.add_batch(fwd, y, loss.loss);
            if (options.excitation_enabled) {
                const auto coeffs = excitation.coefficients(compute_utilization(fwd.activation));
                excite_step(params.tensors, delta, coeffs, partition);
                window.add_coefficients(&coeffs);
            } else {
                apply_delta(params.tensors, delta);
                window.add_coefficients(nullptr);
            }
            ++step;
            if (config.eval_every > 0 && step % config.eval_every == 0) emit(epoch);
            if (options.max_steps > 0 && step >= options.max_steps) {
                stop = true;
                break;
            }
        }
        if (!stop && config.eval_every == 0) emit(epoch);
        if (stop && !result.diverged && last_eval_step != step) emit(epoch);
    }
    if (!result.diverged && last_eval_step != step) emit(config.total_epochs - 1);
    if (result.diverged) result.final_dev_accuracy = std::numeric_limits<double>::quiet_NaN();

    result.steps = step;
    result.degenerate_phi = excitation.degenerate_count();
    result.final_params = std::move(params);
    result.final_state = std::move(state);
    return result;
}

namespace {

void summarise(ExperimentResult& r) {
    std::vector<double> acc;
    for (const auto& run : r.runs) {
        if (run.diverged) ++r.diverged;
        else acc.push_back(run.final_dev_accuracy);
    }
    if (acc.empty()) {
        r.mean_dev_accuracy = std::numeric_limits<double>::quiet_NaN();
        r.std_dev_accuracy = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    r.mean_dev_accuracy = mean;
    r.std_dev_accuracy = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const DataSplits& data, bool write_outputs,
                                const std::string& run_prefix) {
    config.validate();
    ExperimentResult result;
    const std::filesystem::path out_dir = config.output_dir;
    for (auto seed : config.seeds) {
        RunOptions opts;
        opts.run_id = run_prefix + std::string(to_string(config.optimizer.kind)) + "_" +
                      std::string(to_string(config.excitation.variant)) + "_seed" + std::to_string(seed);
        if (write_outputs) opts.csv_path = out_dir / (opts.run_id + ".csv");
        result.runs.push_back(train_run(config, data, seed, opts));
    }
    summarise(result);
    if (write_outputs) write_json(out_dir / "summary.json", summary_json(config, result));
    return result;
}

json summary_json(const ExperimentConfig& config, const ExperimentResult& result) {
    json runs = json::array();
    for (const auto& r : result.runs) {
        runs.push_back({{"run_id", r.run_id},
                        {"seed", r.seed},
                        {"steps", r.steps},
                        {"diverged", r.diverged},
                        {"divergence", r.divergence},
                        {"final_dev_accuracy", number_or_null(r.final_dev_accuracy)},
                        {"final_dev_loss", number_or_null(r.final_dev_loss)},
                        {"degenerate_phi", r.degenerate_phi}});
    }
    return {{"config", to_json(config)},
            {"config_hash", config_hash(config)},
            {"runs", runs},
            {"mean_dev_accuracy", number_or_null(result.mean_dev_accuracy)},
            {"std_dev_accuracy", number_or_null(result.std_dev_accuracy)},
            {"diverged", result.diverged}};
}

const std::vector<std::string>& sweep_presets() {
    static const std::vector<std::string> names = {"sparsity", "batch_size", "scheduler", "power",
                                                   "optimizers", "lr", "deep_rescue", "controls"};
    return names;
}

namespace {

std::string variant_label(ExcitationVariant v) {
    return v == ExcitationVariant::none ? "vanilla" : std::string(to_string(v));
}

std::string axis_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::vector<SweepCell> plan_sweep(const std::string& preset, const ExperimentConfig& base) {
    const std::vector<ExcitationVariant> core = {ExcitationVariant::none, ExcitationVariant::zerosum,
                                                 ExcitationVariant::positivesum};
    std::vector<SweepCell> cells;
    auto add = [&](const std::string& axis, ExperimentConfig cfg, const std::vector<ExcitationVariant>& variants) {
        for (auto v : variants) {
            SweepCell cell;
            cell.axis = axis;
            cell.label = variant_label(v);
            cell.config = cfg;
            cell.config.excitation.variant = v;
            cells.push_back(std::move(cell));
        }
    };

    if (preset == "sparsity") {
        for (double s : {0.9, 0.7, 0.5, 0.3, 0.1}) {
            auto cfg = base;
            cfg.model.sparsity = s;
            add("sparsity=" + axis_number(s), cfg, core);
        }
    } else if (preset == "batch_size") {
        for (std::size_t b : {16, 32, 64, 128, 256, 512}) {
            auto cfg = base;
            cfg.batch_size = b;
            add("batch_size=" + std::to_string(b), cfg, core);
        }
    } else if (preset == "scheduler") {
        for (auto k : {ScheduleKind::constant, ScheduleKind::cosine}) {
            auto cfg = base;
            cfg.schedule = k;
            add("schedule=" + std::string(to_string(k)), cfg, core);
        }
    } else if (preset == "power") {
        add("gamma=any", base, {ExcitationVariant::none});
        for (double g : {1.0, 2.0, 3.0}) {
            auto cfg = base;
            cfg.excitation.gamma = g;
            add("gamma=" + axis_number(g), cfg, {ExcitationVariant::zerosum, ExcitationVariant::positivesum});
        }
    } else if (preset == "optimizers") {
        for (auto k : {OptimizerKind::sgd, OptimizerKind::sgd_momentum, OptimizerKind::adam, OptimizerKind::adamw,
                       OptimizerKind::rmsprop, OptimizerKind::adagrad}) {
            auto cfg = base;
            cfg.optimizer.kind = k;
            cfg.optimizer.lr = default_lr(k);
            add("optimizer=" + std::string(to_string(k)), cfg, core);
        }
    } else if (preset == "lr") {
        const bool adaptive = base.optimizer.kind == OptimizerKind::adam ||
                              base.optimizer.kind == OptimizerKind::adamw ||
                              base.optimizer.kind == OptimizerKind::rmsprop;
        const std::vector<double> grid = adaptive
                                             ? std::vector<double>{1e-4, 1.5e-4, 2e-4, 5e-4, 1e-3, 2e-3, 3e-3}
                                             : std::vector<double>{0.01, 0.015, 0.02, 0.05, 0.1, 0.2, 0.3};
        for (double lr : grid) {
            auto cfg = base;
            cfg.optimizer.lr = lr;
            add("lr=" + axis_number(lr), cfg, core);
        }
    } else if (preset == "deep_rescue") {
        for (auto [depth, kind] : {std::pair{10, OptimizerKind::sgd}, std::pair{20, OptimizerKind::adam}}) {
            auto cfg = base;
            cfg.model.depth = static_cast<std::size_t>(depth);
            cfg.model.use_residual = false;
            cfg.optimizer.kind = kind;
            cfg.optimizer.lr = default_lr(kind);
            add("depth=" + std::to_string(depth) + "/" + std::string(to_string(kind)), cfg, core);
        }
    } else if (preset == "controls") {
        add("controls", base,
            {ExcitationVariant::none, ExcitationVariant::zerosum, ExcitationVariant::positivesum,
             ExcitationVariant::expdiff, ExcitationVariant::global_exp, ExcitationVariant::random_boost,
             ExcitationVariant::inverted});
    } else {
        throw ConfigError("unknown sweep preset '" + preset + "'");
    }
    for (auto& c : cells) c.config.validate();
    return cells;
}

namespace {

std::string path_safe(std::string s) {
    for (char& ch : s)
        if (ch == '=' || ch == '/' || ch == ' ') ch = '_';
    return s;
}

void fill_deltas(SweepResult& sweep) {
    // Baseline: the vanilla cell on the same axis, else the only vanilla cell.
    const SweepCell* lone_vanilla = nullptr;
    std::size_t vanilla_cells = 0;
    for (const auto& c : sweep.cells)
        if (c.label == "vanilla") {
            lone_vanilla = &c;
            ++vanilla_cells;
        }
    for (auto& c : sweep.cells) {
        const SweepCell* base = nullptr;
        for (const auto& other : sweep.cells)
            if (other.label == "vanilla" && other.axis == c.axis) base = &other;
        if (!base && vanilla_cells == 1) base = lone_vanilla;
        c.delta = base ? c.result.mean_dev_accuracy - base->result.mean_dev_accuracy
                       : std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

SweepResult run_sweep(const std::string& preset, const ExperimentConfig& base, const DataSplits& data,
                      std::size_t threads, bool write_outputs) {
    SweepResult sweep{preset, plan_sweep(preset, base)};
    const std::filesystem::path root = std::filesystem::path(base.output_dir) / preset;
    for (auto& c : sweep.cells) c.config.output_dir = (root / path_safe(c.axis + "_" + c.label)).string();

    std::atomic<std::size_t> next{0};
    auto worker = [&](bool single_kernel_thread) {
#ifdef EXC_HAVE_OPENMP
        if (single_kernel_thread) omp_set_num_threads(1);
#else
        (void)single_kernel_thread;
#endif
        for (std::size_t i = next++; i < sweep.cells.size(); i = next++) {
            auto& cell = sweep.cells[i];
            cell.result = run_experiment(cell.config, data, write_outputs, path_safe(cell.axis) + "_");
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, sweep.cells.size()));
    if (threads == 1) {
        worker(false);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, true);
        for (auto& t : pool) t.join();
    }
    fill_deltas(sweep);
    if (write_outputs) write_json(root / "summary.json", sweep_summary_json(sweep));
    return sweep;
}

void print_sweep_table(const SweepResult& sweep, std::ostream& out) {
    out << "Preset: " << sweep.preset << "\n";
    out << std::left << std::setw(28) << "Axis" << std::setw(14) << "Variant" << std::setw(22)
        << "Dev Accuracy (%)" << "Delta\n";
    std::string last_axis;
    for (const auto& c : sweep.cells) {
        std::ostringstream acc, delta;
        acc << std::fixed << std::setprecision(2) << 100.0 * c.result.mean_dev_accuracy << " +- "
            << 100.0 * c.result.std_dev_accuracy;
        if (c.label == "vanilla" || std::isnan(c.delta)) delta << "---";
        else delta << std::showpos << std::fixed << std::setprecision(2) << 100.0 * c.delta;
        out << std::left << std::setw(28) << (c.axis == last_axis ? "" : c.axis) << std::setw(14) << c.label
            << std::setw(22) << acc.str() << delta.str();
        if (c.result.diverged) out << "  (" << c.result.diverged << " diverged)";
        out << "\n";
        last_axis = c.axis;
    }
}

json sweep_summary_json(const SweepResult& sweep) {
    json cells = json::array();
    for (const auto& c : sweep.cells) {
        cells.push_back({{"axis", c.axis},
                         {"variant", c.label},
                         {"mean", number_or_null(c.result.mean_dev_accuracy)},
                         {"std", number_or_null(c.result.std_dev_accuracy)},
                         {"delta_vs_vanilla", c.label == "vanilla" ? json(0.0) : number_or_null(c.delta)},
                         {"diverged", c.result.diverged},
                         {"runs", c.result.runs.size()},
                         {"output_dir", c.config.output_dir},
                         {"config_hash", config_hash(c.config)}});
    }
    return {{"preset", sweep.preset}, {"cells", cells}};
}

}  // namespace exc
