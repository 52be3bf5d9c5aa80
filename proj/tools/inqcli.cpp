// Command-line front end for the quantization pipeline: synthetic data
// generation, baseline training, incremental quantization runs, evaluation
// over the shift-add runtime, model statistics and pack/unpack utilities.
//
// Configuration is a plain key=value file selected with --config; command
// line flags override file values. Every artifact embeds or sits next to
// the resolved configuration, so runs are reproducible from their outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "inq/inq.hpp"

namespace fs = std::filesystem;

namespace {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path) {
        KeyValueConfig cfg;
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto last = line.find_last_not_of(" \t\r");
            line = line.substr(first, last - first + 1);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
            }
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            cfg.kv_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get(const std::string& key) const { return kv_.at(key); }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
        return out;
    }

private:
    std::map<std::string, std::string> kv_; // sorted, so serialization is stable
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Binds a CLI11 option to a config key: the flag wins when given, the file
// value applies otherwise, and the resolved value is recorded for
// provenance.
class Resolver {
public:
    Resolver(const KeyValueConfig& file, KeyValueConfig& resolved)
        : file_(file), resolved_(resolved) {}

    void apply(const CLI::Option* opt, std::string& var, const std::string& key) {
        if (opt->count() == 0 && file_.has(key)) var = file_.get(key);
        resolved_.set(key, var);
    }

    void apply(const CLI::Option* opt, double& var, const std::string& key) {
        if (opt->count() == 0 && file_.has(key)) var = parse_double(key, file_.get(key));
        resolved_.set(key, fmt_double(var));
    }

    void apply(const CLI::Option* opt, std::uint64_t& var, const std::string& key) {
        if (opt->count() == 0 && file_.has(key)) var = parse_u64(key, file_.get(key));
        resolved_.set(key, std::to_string(var));
    }

    void apply(const CLI::Option* opt, int& var, const std::string& key) {
        if (opt->count() == 0 && file_.has(key)) {
            var = static_cast<int>(parse_u64(key, file_.get(key)));
        }
        resolved_.set(key, std::to_string(var));
    }

private:
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config field '" + key + "': not a number: " + v);
        }
    }

    static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            unsigned long long u = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return u;
        } catch (const std::exception&) {
            throw ConfigError("config field '" + key + "': not a non-negative integer: " + v);
        }
    }

    const KeyValueConfig& file_;
    KeyValueConfig& resolved_;
};

// "img.idx,lbl.idx" loads an IDX pair; a single path loads the native
// dataset container.
inq::Dataset load_any_dataset(const std::string& spec, const std::string& field) {
    if (spec.empty()) throw ConfigError("config field '" + field + "': no dataset given");
    const auto comma = spec.find(',');
    if (comma != std::string::npos) {
        return inq::load_idx(spec.substr(0, comma), spec.substr(comma + 1));
    }
    return inq::load_dataset(spec);
}

std::vector<std::size_t> parse_dims(const std::string& text, const std::string& field) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, 'x')) {
        try {
            dims.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw ConfigError("config field '" + field + "': bad dimension '" + tok + "'");
        }
    }
    return dims;
}

// Network spec grammar:
//   linear:IN,CLASSES
//   mlp:IN,HIDDEN...,CLASSES          (ReLU between dense layers)
//   convnet:CxHxW,CLASSES             (2 conv + 2 dense reference net)
//   auto                              (mlp for point data, convnet for images)
inq::Network build_network(std::string spec, const inq::Dataset& data) {
    const auto sample = data.sample_shape();
    if (spec == "auto") {
        if (sample.size() == 3) {
            spec = "convnet:" + std::to_string(sample[0]) + "x" + std::to_string(sample[1]) + "x" +
                   std::to_string(sample[2]) + "," + std::to_string(data.num_classes);
        } else if (sample.size() == 1) {
            spec = "mlp:" + std::to_string(sample[0]) + ",128,128," +
                   std::to_string(data.num_classes);
        } else {
            throw ConfigError("config field 'net': cannot infer a network for sample shape " +
                              inq::shape_to_string(sample));
        }
    }
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("config field 'net': expected kind:dims, got '" + spec + "'");
    }
    const std::string kind = spec.substr(0, colon);
    std::vector<std::string> parts;
    {
        std::stringstream ss(spec.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) parts.push_back(tok);
    }

    if (kind == "linear" || kind == "mlp") {
        std::vector<std::size_t> widths;
        for (const auto& p : parts) {
            for (std::size_t d : parse_dims(p, "net")) widths.push_back(d);
        }
        if (widths.size() < 2) throw ConfigError("config field 'net': need at least in,out widths");
        std::vector<inq::LayerSpec> layers;
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            layers.push_back(inq::DenseSpec{widths[i], widths[i + 1]});
            if (i + 2 < widths.size()) layers.push_back(inq::ReluSpec{});
        }
        return inq::make_network({widths[0]}, layers);
    }
    if (kind == "convnet") {
        if (parts.size() != 2) throw ConfigError("config field 'net': convnet:CxHxW,CLASSES");
        const auto dims = parse_dims(parts[0], "net");
        if (dims.size() != 3) throw ConfigError("config field 'net': convnet input must be CxHxW");
        const std::size_t channels = dims[0], h = dims[1], w = dims[2];
        const std::size_t classes = parse_dims(parts[1], "net").at(0);
        if (h % 4 != 0 || w % 4 != 0) {
            throw ConfigError("config field 'net': convnet needs height/width divisible by 4");
        }
        const std::size_t flat = 16 * (h / 4) * (w / 4);
        return inq::make_network(
            {channels, h, w},
            {inq::Conv2DSpec{channels, 8, 3, 1, 1}, inq::ReluSpec{}, inq::MaxPool2DSpec{2},
             inq::Conv2DSpec{8, 16, 3, 1, 1}, inq::ReluSpec{}, inq::MaxPool2DSpec{2},
             inq::FlattenSpec{}, inq::DenseSpec{flat, 64}, inq::ReluSpec{},
             inq::DenseSpec{64, classes}});
    }
    throw ConfigError("config field 'net': unknown network kind '" + kind + "'");
}

std::vector<std::pair<std::size_t, double>> parse_lr_schedule(const std::string& text) {
    std::vector<std::pair<std::size_t, double>> sched;
    if (text.empty()) return sched;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("config field 'sgd.lr_schedule': expected epoch:mult, got '" + tok +
                              "'");
        }
        try {
            sched.emplace_back(std::stoull(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ConfigError("config field 'sgd.lr_schedule': bad entry '" + tok + "'");
        }
    }
    return sched;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw inq::IoError("cannot create file: " + path.string());
    f << content;
    if (!f) throw inq::IoError("write failed: " + path.string());
}

std::string train_metrics_csv(const std::vector<inq::EpochMetrics>& metrics) {
    std::string out = "epoch,loss,accuracy\n";
    for (const auto& m : metrics) {
        out += std::to_string(m.epoch) + "," + fmt_double(m.loss) + "," + fmt_double(m.accuracy) +
               "\n";
    }
    return out;
}

std::string inq_metrics_csv(const std::vector<inq::InqStepMetrics>& steps) {
    std::string out = "step,sigma,frozen_fraction,train_loss,eval_accuracy\n";
    for (const auto& m : steps) {
        out += std::to_string(m.step) + "," + fmt_double(m.sigma) + "," +
               fmt_double(m.frozen_fraction) + "," + fmt_double(m.train_loss) + "," +
               fmt_double(m.eval_accuracy) + "\n";
    }
    return out;
}

// Common per-command state: config file, resolved provenance, output dir.
struct CommandContext {
    std::string config_path;
    KeyValueConfig file;
    KeyValueConfig resolved;
    std::string out_dir = "out";

    void load_file() {
        if (!config_path.empty()) file = KeyValueConfig::from_file(config_path);
    }

    fs::path outfile(const std::string& name) const { return fs::path(out_dir) / name; }

    void prepare_out() const { fs::create_directories(out_dir); }

    void write_provenance() const {
        write_text(outfile("config.txt"), resolved.serialize());
    }
};

struct SgdFlags {
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::size_t batch = 32;
    std::string lr_schedule;

    CLI::Option* lr_opt = nullptr;
    CLI::Option* momentum_opt = nullptr;
    CLI::Option* decay_opt = nullptr;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* sched_opt = nullptr;

    void attach(CLI::App* cmd) {
        lr_opt = cmd->add_option("--lr", lr, "base learning rate");
        momentum_opt = cmd->add_option("--momentum", momentum, "SGD momentum");
        decay_opt = cmd->add_option("--weight-decay", weight_decay, "L2 weight decay");
        batch_opt = cmd->add_option("--batch", batch, "mini-batch size");
        sched_opt = cmd->add_option("--lr-schedule", lr_schedule,
                                    "epoch:mult list, e.g. 30:0.1,60:0.01");
    }

    inq::SgdConfig resolve(Resolver& r) {
        r.apply(lr_opt, lr, "sgd.lr");
        r.apply(momentum_opt, momentum, "sgd.momentum");
        r.apply(decay_opt, weight_decay, "sgd.weight_decay");
        r.apply(batch_opt, batch, "sgd.batch");
        r.apply(sched_opt, lr_schedule, "sgd.lr_schedule");
        inq::SgdConfig cfg;
        cfg.learning_rate = lr;
        cfg.momentum = momentum;
        cfg.weight_decay = weight_decay;
        cfg.batch_size = batch;
        cfg.lr_schedule = parse_lr_schedule(lr_schedule);
        try {
            inq::validate(cfg);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config field 'sgd.*': ") + e.what());
        }
        return cfg;
    }
};

int cmd_gen_data(CommandContext& ctx, const std::string& kind, std::size_t classes,
                 std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
    const inq::SyntheticKind k = inq::synthetic_kind_from_string(kind);
    ctx.prepare_out();
    inq::Dataset train = inq::gen_synthetic(k, classes, n_train, seed);
    inq::Dataset test = inq::gen_synthetic(k, classes, n_test, inq::derive_seed(seed, 0x7e57));
    inq::save_dataset(ctx.outfile("train.inqd").string(), train);
    inq::save_dataset(ctx.outfile("test.inqd").string(), test);
    ctx.write_provenance();
    std::cout << "wrote " << ctx.outfile("train.inqd").string() << " (" << train.size()
              << " samples), " << ctx.outfile("test.inqd").string() << " (" << test.size()
              << " samples)\n";
    return 0;
}

int cmd_train(CommandContext& ctx, const std::string& train_spec, const std::string& test_spec,
              const std::string& net_spec, const inq::SgdConfig& sgd, std::size_t epochs,
              std::uint64_t seed) {
    inq::Dataset train_data = load_any_dataset(train_spec, "data.train");
    inq::Network net = build_network(net_spec, train_data);
    inq::init_params(net, seed);

    ctx.prepare_out();
    auto metrics = inq::train(net, train_data, sgd, epochs, seed);
    for (const auto& m : metrics) {
        std::cout << "epoch " << m.epoch << "  loss " << m.loss << "  acc " << m.accuracy << "\n";
    }
    inq::save_model(ctx.outfile("baseline.inqm").string(), net, ctx.resolved.serialize());
    write_text(ctx.outfile("train_metrics.csv"), train_metrics_csv(metrics));
    ctx.write_provenance();

    if (!test_spec.empty()) {
        inq::Dataset test_data = load_any_dataset(test_spec, "data.test");
        std::cout << "test accuracy " << inq::evaluate(net, test_data).top1 << "\n";
    }
    std::cout << "wrote " << ctx.outfile("baseline.inqm").string() << "\n";
    return 0;
}

int cmd_inq(CommandContext& ctx, const std::string& baseline_path, const std::string& train_spec,
            const std::string& test_spec, const inq::SgdConfig& sgd, int bits,
            const std::string& schedule, const std::string& strategy, std::size_t epochs_per_step,
            std::uint64_t seed, const std::string& resume_path,
            const std::string& checkpoint_path) {
    inq::Dataset train_data = load_any_dataset(train_spec, "data.train");
    inq::Dataset test_data =
        test_spec.empty() ? train_data : load_any_dataset(test_spec, "data.test");

    ctx.prepare_out();

    // effective run parameters: flags/config for a fresh run, the stored
    // ones when resuming
    inq::InqOptions opt;
    inq::SgdConfig run_sgd = sgd;
    inq::InqResult result;

    inq::StepCallback on_step = [&](const inq::InqState& state, const inq::InqStepMetrics& m) {
        std::cout << "step " << m.step << "  sigma " << m.sigma << "  frozen "
                  << m.frozen_fraction << "  eval acc " << m.eval_accuracy << "\n";
        if (!checkpoint_path.empty()) {
            // refreshed after every step; a crashed run resumes from the last one
            inq::save_checkpoint(checkpoint_path, inq::InqCheckpoint{state, opt, run_sgd});
        }
    };

    if (!resume_path.empty()) {
        inq::InqCheckpoint ckpt = inq::load_checkpoint(resume_path);
        opt = ckpt.options;
        run_sgd = ckpt.sgd_config;
        result = inq::resume_inq(ckpt, train_data, test_data, on_step);
    } else {
        inq::LoadedModel baseline = inq::load_model(baseline_path);
        if (baseline.is_quantized()) {
            throw ConfigError("inq expects a full-precision baseline model: " + baseline_path);
        }
        try {
            opt.bits = bits;
            opt.schedule = inq::parse_schedule(schedule);
            opt.strategy = inq::strategy_from_string(strategy);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config field 'inq.*': ") + e.what());
        }
        opt.epochs_per_step = epochs_per_step;
        opt.seed = seed;
        result = inq::run_inq(baseline.network(), opt, train_data, test_data, run_sgd, on_step);
    }

    result.model.provenance = ctx.resolved.serialize();
    inq::save_model(ctx.outfile("quantized.inqm").string(), result.model);
    write_text(ctx.outfile("inq_metrics.csv"), inq_metrics_csv(result.steps));
    ctx.write_provenance();
    std::cout << "wrote " << ctx.outfile("quantized.inqm").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_spec,
             const std::string& baseline_path, bool crosscheck) {
    inq::Dataset data = load_any_dataset(data_spec, "data.test");
    inq::LoadedModel loaded = inq::load_model(model_path);

    inq::EvalMetrics metrics;
    if (loaded.is_quantized()) {
        inq::ShiftModel sm = inq::to_shift_form(loaded.quantized());
        metrics = inq::evaluate_shift(sm, data);
        if (crosscheck) {
            inq::Network decoded = inq::decode_model(loaded.quantized());
            std::vector<std::size_t> idx(data.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            for (std::size_t begin = 0; begin < data.size(); begin += 256) {
                const std::size_t count = std::min<std::size_t>(256, data.size() - begin);
                auto [batch, labels] = data.gather(idx, begin, count);
                if (!inq::bit_identical(inq::shift_forward(sm, batch),
                                        inq::forward(decoded, batch))) {
                    throw std::runtime_error("cross-check failed: shift-add forward deviates");
                }
            }
            std::cout << "cross-check: shift-add forward is bit-identical to the decoded model\n";
        }
    } else {
        metrics = inq::evaluate(loaded.network(), data);
    }

    auto pct = [](double v) { return 100.0 * v; };
    std::cout << "model " << model_path << "\n";
    std::cout << "top-1 accuracy " << pct(metrics.top1) << "%";
    if (metrics.topk) std::cout << "  top-" << metrics.k << " accuracy " << pct(*metrics.topk) << "%";
    std::cout << "\n";

    if (!baseline_path.empty()) {
        inq::LoadedModel base = inq::load_model(baseline_path);
        if (base.is_quantized()) throw ConfigError("--baseline expects a full-precision model");
        inq::EvalMetrics ref = inq::evaluate(base.network(), data);
        std::cout << "baseline top-1 accuracy " << pct(ref.top1) << "%\n";
        std::cout << "decrease in top-1 error " << pct(metrics.top1 - ref.top1) << "%";
        if (metrics.topk && ref.topk) {
            std::cout << "  decrease in top-" << metrics.k << " error "
                      << pct(*metrics.topk - *ref.topk) << "%";
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_stats(const std::string& model_path, const std::string& csv_dir) {
    inq::LoadedModel loaded = inq::load_model(model_path);
    if (!loaded.is_quantized()) {
        throw ConfigError("stats expects a quantized model: " + model_path);
    }
    const inq::QuantizedModel& model = loaded.quantized();
    inq::DistributionTable table = inq::distribution(model);
    inq::CompressionReport report = inq::compression_report(model);

    std::cout << "weight distribution (per-layer percentages)\n";
    std::cout << inq::format_distribution(table) << "\n";
    std::cout << "effective bit-widths\n";
    for (const auto& layer : table.layers) {
        std::cout << "  " << layer.name << ": " << inq::effective_bitwidth(layer) << "\n";
    }
    std::cout << "\ncompression (vs 32-bit float)\n";
    std::cout << inq::format_compression(report);

    if (!csv_dir.empty()) {
        fs::create_directories(csv_dir);
        write_text(fs::path(csv_dir) / "distribution.csv", inq::distribution_csv(table));
        write_text(fs::path(csv_dir) / "compression.csv", inq::compression_csv(report));
        std::cout << "wrote CSV reports to " << csv_dir << "\n";
    }
    return 0;
}

int cmd_pack(const std::string& model_path, int bits, const std::string& out_path) {
    inq::LoadedModel loaded = inq::load_model(model_path);
    if (loaded.is_quantized()) throw ConfigError("pack expects a full-precision model");
    inq::QuantizedModel packed =
        inq::quantize_one_shot(loaded.network(), bits, loaded.provenance);
    inq::save_model(out_path, packed);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_unpack(const std::string& model_path, const std::string& out_path) {
    inq::LoadedModel loaded = inq::load_model(model_path);
    if (!loaded.is_quantized()) throw ConfigError("unpack expects a quantized model");
    inq::Network net = inq::decode_model(loaded.quantized());
    inq::save_model(out_path, net, loaded.provenance);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"power-of-two network quantization pipeline"};
    app.require_subcommand(1);

    CommandContext ctx;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset pair");
    std::string gen_kind = "spirals";
    std::size_t gen_classes = 10, gen_ntrain = 4000, gen_ntest = 2000;
    std::uint64_t gen_seed = 1;
    auto* gen_cfg = gen->add_option("--config", ctx.config_path, "key=value config file");
    auto* gen_kind_o = gen->add_option("--kind", gen_kind, "blobs or spirals");
    auto* gen_classes_o = gen->add_option("--classes", gen_classes, "number of classes");
    auto* gen_ntrain_o = gen->add_option("--n-train", gen_ntrain, "training samples");
    auto* gen_ntest_o = gen->add_option("--n-test", gen_ntest, "test samples");
    auto* gen_seed_o = gen->add_option("--seed", gen_seed, "generator seed");
    auto* gen_out_o = gen->add_option("--out", ctx.out_dir, "output directory");
    (void)gen_cfg;

    // train
    auto* tr = app.add_subcommand("train", "train a full-precision baseline");
    std::string tr_train, tr_test, tr_net = "auto";
    std::size_t tr_epochs = 100;
    std::uint64_t tr_seed = 1;
    SgdFlags tr_sgd;
    tr->add_option("--config", ctx.config_path, "key=value config file");
    auto* tr_train_o = tr->add_option("--data-train", tr_train,
                                      "dataset file, or images,labels IDX pair");
    auto* tr_test_o = tr->add_option("--data-test", tr_test, "held-out dataset (optional)");
    auto* tr_net_o = tr->add_option("--net", tr_net, "network spec (auto, linear:, mlp:, convnet:)");
    auto* tr_epochs_o = tr->add_option("--epochs", tr_epochs, "training epochs");
    auto* tr_seed_o = tr->add_option("--seed", tr_seed, "run seed");
    auto* tr_out_o = tr->add_option("--out", ctx.out_dir, "output directory");
    tr_sgd.attach(tr);

    // inq
    auto* iq = app.add_subcommand("inq", "incremental quantization of a trained baseline");
    std::string iq_baseline, iq_train, iq_test, iq_schedule = "resnet18-5bit",
                             iq_strategy = "pruning", iq_resume, iq_ckpt;
    int iq_bits = 5;
    std::size_t iq_eps = 2;
    std::uint64_t iq_seed = 1;
    SgdFlags iq_sgd;
    iq->add_option("--config", ctx.config_path, "key=value config file");
    auto* iq_baseline_o = iq->add_option("--baseline", iq_baseline, "full-precision model file");
    auto* iq_train_o = iq->add_option("--data-train", iq_train,
                                      "dataset file, or images,labels IDX pair");
    auto* iq_test_o = iq->add_option("--data-test", iq_test, "held-out dataset (optional)");
    auto* iq_bits_o = iq->add_option("--bits", iq_bits, "expected bit-width b");
    auto* iq_schedule_o =
        iq->add_option("--schedule", iq_schedule, "preset name or sigma list like 0.5,0.75,1");
    auto* iq_strategy_o = iq->add_option("--strategy", iq_strategy, "pruning or random");
    auto* iq_eps_o = iq->add_option("--epochs-per-step", iq_eps, "re-training epochs per step");
    auto* iq_seed_o = iq->add_option("--seed", iq_seed, "run seed");
    auto* iq_out_o = iq->add_option("--out", ctx.out_dir, "output directory");
    iq->add_option("--resume", iq_resume, "resume from a checkpoint file");
    iq->add_option("--checkpoint", iq_ckpt, "write a checkpoint after every step");
    iq_sgd.attach(iq);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a model (shift-add path when quantized)");
    std::string ev_model, ev_data, ev_baseline;
    bool ev_crosscheck = false;
    ev->add_option("--model", ev_model, "model file")->required();
    ev->add_option("--data", ev_data, "dataset file, or images,labels IDX pair")->required();
    ev->add_option("--baseline", ev_baseline, "full-precision reference to compare against");
    ev->add_flag("--crosscheck", ev_crosscheck,
                 "verify the shift-add forward against the decoded model bit for bit");

    // stats
    auto* st = app.add_subcommand("stats", "distribution, bit-width and compression reports");
    std::string st_model, st_csv;
    st->add_option("--model", st_model, "quantized model file")->required();
    st->add_option("--csv", st_csv, "also write CSV reports into this directory");

    // pack / unpack
    auto* pk = app.add_subcommand("pack", "one-shot quantize a full-precision model");
    std::string pk_model, pk_out = "packed.inqm";
    int pk_bits = 5;
    pk->add_option("--model", pk_model, "full-precision model file")->required();
    pk->add_option("--bits", pk_bits, "expected bit-width b");
    pk->add_option("--out", pk_out, "output model file");

    auto* up = app.add_subcommand("unpack", "decode a quantized model to full precision");
    std::string up_model, up_out = "unpacked.inqm";
    up->add_option("--model", up_model, "quantized model file")->required();
    up->add_option("--out", up_out, "output model file");

    CLI11_PARSE(app, argc, argv);

    try {
        ctx.load_file();
        Resolver r(ctx.file, ctx.resolved);

        if (gen->parsed()) {
            r.apply(gen_kind_o, gen_kind, "data.kind");
            r.apply(gen_classes_o, gen_classes, "data.classes");
            r.apply(gen_ntrain_o, gen_ntrain, "data.n_train");
            r.apply(gen_ntest_o, gen_ntest, "data.n_test");
            r.apply(gen_seed_o, gen_seed, "seed");
            r.apply(gen_out_o, ctx.out_dir, "out");
            return cmd_gen_data(ctx, gen_kind, gen_classes, gen_ntrain, gen_ntest, gen_seed);
        }
        if (tr->parsed()) {
            r.apply(tr_train_o, tr_train, "data.train");
            r.apply(tr_test_o, tr_test, "data.test");
            r.apply(tr_net_o, tr_net, "net");
            r.apply(tr_epochs_o, tr_epochs, "epochs");
            r.apply(tr_seed_o, tr_seed, "seed");
            r.apply(tr_out_o, ctx.out_dir, "out");
            inq::SgdConfig sgd = tr_sgd.resolve(r);
            if (tr_epochs == 0) throw ConfigError("config field 'epochs': must be >= 1");
            return cmd_train(ctx, tr_train, tr_test, tr_net, sgd, tr_epochs, tr_seed);
        }
        if (iq->parsed()) {
            r.apply(iq_baseline_o, iq_baseline, "baseline");
            r.apply(iq_train_o, iq_train, "data.train");
            r.apply(iq_test_o, iq_test, "data.test");
            r.apply(iq_bits_o, iq_bits, "inq.bits");
            r.apply(iq_schedule_o, iq_schedule, "inq.schedule");
            r.apply(iq_strategy_o, iq_strategy, "inq.strategy");
            r.apply(iq_eps_o, iq_eps, "inq.epochs_per_step");
            r.apply(iq_seed_o, iq_seed, "seed");
            r.apply(iq_out_o, ctx.out_dir, "out");
            inq::SgdConfig sgd = iq_sgd.resolve(r);
            if (iq_resume.empty() && iq_baseline.empty()) {
                throw ConfigError("config field 'baseline': required unless --resume is given");
            }
            return cmd_inq(ctx, iq_baseline, iq_train, iq_test, sgd, iq_bits, iq_schedule,
                           iq_strategy, iq_eps, iq_seed, iq_resume, iq_ckpt);
        }
        if (ev->parsed()) return cmd_eval(ev_model, ev_data, ev_baseline, ev_crosscheck);
        if (st->parsed()) return cmd_stats(st_model, st_csv);
        if (pk->parsed()) return cmd_pack(pk_model, pk_bits, pk_out);
        if (up->parsed()) return cmd_unpack(up_model, up_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
