// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/train.hpp"

#include "plm/errors.hpp"
#include "plm/losses.hpp"
#include "plm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace plm {

namespace {

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<double> &v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt_double(v[i]);
    }
    return s;
}

std::vector<double> split_doubles(const std::string &s) {
    std::vector<double> out;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool in_grid(double lr) {
    return std::any_of(kLearningRateGrid.begin(), kLearningRateGrid.end(),
                       [lr](double g) { return std::abs(g - lr) <= 1e-12 * std::max(1.0, std::abs(lr)); });
}

} // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_map(const ConfigMap &m) {
    RunConfig c;
    if (m.has("seed")) {
        c.seed = m.get_u64("seed", 0);
    } else if (const char *env = std::getenv(kSeedEnvVar); env && *env) {
        ConfigMap tmp;
        tmp.set("seed", env);
        c.seed = tmp.get_u64("seed", 0);
    }

    c.encoder.n_layers = m.get_size("encoder.n_layers", c.encoder.n_layers);
    c.encoder.n_heads = m.get_size("encoder.n_heads", c.encoder.n_heads);
    c.encoder.d_model = m.get_size("encoder.d_model", c.encoder.d_model);
    c.encoder.d_ff = m.get_size("encoder.d_ff", c.encoder.d_ff);
    c.encoder.max_len = m.get_size("encoder.max_len", c.encoder.max_len);

    c.head.kind = parse_head_kind(m.get("head.kind", head_kind_name(c.head.kind)));
    c.head.latent_dim = m.get_size("head.latent_dim", c.head.latent_dim);
    c.head.n_heads = m.get_size("head.n_heads", c.head.n_heads);
    c.head.feature_dim = m.get_size("head.feature_dim", c.head.feature_dim);
    c.head.dropout = m.get_double("head.dropout", c.head.dropout);
    c.head.contact_combine = parse_contact_combine(m.get("head.contact_combine", contact_combine_name(c.head.contact_combine)));

    if (m.get_bool("lora.enabled", true)) {
        LoraConfig l;
        l.rank = m.get_size("lora.rank", l.rank);
        l.alpha = m.get_double("lora.alpha", l.alpha);
        l.targets = parse_targets(m.get("lora.targets", format_targets(l.targets)));
        l.seed = m.get_u64("lora.seed", c.seed);
        c.lora = l;
    } else {
        c.lora.reset();
    }

    const TaskKind kind = parse_task_kind(m.get("task.kind", task_kind_name(TaskKind::kSeqRegression)));
    const std::size_t classes = m.get_size("task.num_classes", kind == TaskKind::kSeqRegression ? 1 : 2);
    const MetricKind reg_metric = parse_metric(m.get("task.metric", "spearman"));
    c.task = make_task(m.get("task.name", "task"), kind, classes, kind == TaskKind::kSeqRegression ? reg_metric : MetricKind::kSpearman);
    if (kind != TaskKind::kSeqRegression && m.has("task.metric") && parse_metric(m.get("task.metric", "")) != c.task.metric)
        throw ConfigError("task.metric " + m.get("task.metric", "") + " does not match task kind " + task_kind_name(kind));
    c.task.standardize = m.get_bool("task.standardize", c.task.standardize);
    c.head.out_dim = c.task.out_dim();
    c.head.token_level = c.task.token_level();

    c.lr = m.get_double("train.lr", c.lr);
    c.epochs = m.get_size("train.epochs", c.epochs);
    c.batch_size = m.get_size("train.batch_size", c.batch_size);
    c.accumulation = m.get_size("train.accumulation", c.accumulation);
    c.shuffle = m.get_bool("train.shuffle", c.shuffle);
    c.train_metric = m.get_bool("train.train_metric", c.train_metric);
    c.lr_unrestricted = m.get_bool("train.lr_unrestricted", c.lr_unrestricted);

    c.pretrain.steps = m.get_size("pretrain.steps", c.pretrain.steps);
    c.pretrain.batch_size = m.get_size("pretrain.batch_size", c.pretrain.batch_size);
    c.pretrain.lr = m.get_double("pretrain.lr", c.pretrain.lr);
    c.pretrain.mask_rate = m.get_double("pretrain.mask_rate", c.pretrain.mask_rate);
    c.pretrain.corpus_size = m.get_size("pretrain.corpus_size", c.pretrain.corpus_size);
    c.pretrain.corpus_max_len = m.get_size("pretrain.corpus_max_len", c.pretrain.corpus_max_len);
    c.pretrain.log_every = m.get_size("pretrain.log_every", c.pretrain.log_every);
    c.validate();
    return c;
}

ConfigMap RunConfig::to_map() const {
    ConfigMap m;
    m.set("seed", std::to_string(seed));
    m.set("encoder.n_layers", std::to_string(encoder.n_layers));
    m.set("encoder.n_heads", std::to_string(encoder.n_heads));
    m.set("encoder.d_model", std::to_string(encoder.d_model));
    m.set("encoder.d_ff", std::to_string(encoder.d_ff));
    m.set("encoder.max_len", std::to_string(encoder.max_len));
    m.set("head.kind", head_kind_name(head.kind));
    m.set("head.latent_dim", std::to_string(head.latent_dim));
    m.set("head.n_heads", std::to_string(head.n_heads));
    m.set("head.feature_dim", std::to_string(head.feature_dim));
    m.set("head.dropout", fmt_double(head.dropout));
    m.set("head.contact_combine", contact_combine_name(head.contact_combine));
    m.set("lora.enabled", lora ? "true" : "false");
    if (lora) {
        m.set("lora.rank", std::to_string(lora->rank));
        m.set("lora.alpha", fmt_double(lora->alpha));
        m.set("lora.targets", format_targets(lora->targets));
        m.set("lora.seed", std::to_string(lora->seed));
    }
    m.set("task.name", task.name);
    m.set("task.kind", task_kind_name(task.kind));
    m.set("task.num_classes", std::to_string(task.num_classes));
    m.set("task.metric", metric_name(task.metric));
    m.set("task.standardize", task.standardize ? "true" : "false");
    m.set("train.lr", fmt_double(lr));
    m.set("train.epochs", std::to_string(epochs));
    m.set("train.batch_size", std::to_string(batch_size));
    m.set("train.accumulation", std::to_string(accumulation));
    m.set("train.shuffle", shuffle ? "true" : "false");
    m.set("train.train_metric", train_metric ? "true" : "false");
    m.set("train.lr_unrestricted", lr_unrestricted ? "true" : "false");
    m.set("pretrain.steps", std::to_string(pretrain.steps));
    m.set("pretrain.batch_size", std::to_string(pretrain.batch_size));
    m.set("pretrain.lr", fmt_double(pretrain.lr));
    m.set("pretrain.mask_rate", fmt_double(pretrain.mask_rate));
    m.set("pretrain.corpus_size", std::to_string(pretrain.corpus_size));
    m.set("pretrain.corpus_max_len", std::to_string(pretrain.corpus_max_len));
    m.set("pretrain.log_every", std::to_string(pretrain.log_every));
    return m;
}

void RunConfig::validate() const {
    encoder.validate();
    head.validate();
    task.validate();
    if (head.out_dim != task.out_dim() || head.token_level != task.token_level())
        throw ConfigError("head output does not match task " + task.name);
    if (lora) {
        if (lora->targets.empty()) throw ConfigError("LoRA target set is empty");
        if (lora->rank < 1 || lora->rank > encoder.d_model)
            throw ConfigError("LoRA rank " + std::to_string(lora->rank) + " must be in [1, " + std::to_string(encoder.d_model) + "]");
        if (!(lora->alpha > 0.0)) throw ConfigError("LoRA alpha must be positive");
    }
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!lr_unrestricted && !in_grid(lr))
        throw ConfigError("learning rate " + fmt_double(lr) +
                          " is outside the search grid {5e-6, 1e-6, 5e-5, 1e-5, 5e-4, 1e-4}; set train.lr_unrestricted = true to allow it");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1 || accumulation < 1) throw ConfigError("batch size and accumulation must be >= 1");
    if (accumulation % batch_size != 0)
        throw ConfigError("accumulation (" + std::to_string(accumulation) + " samples) must be a multiple of batch size " +
                          std::to_string(batch_size));
    if (pretrain.steps < 1 || pretrain.batch_size < 1 || !(pretrain.lr > 0.0))
        throw ConfigError("pretraining needs steps, batch size and lr > 0");
    if (!(pretrain.mask_rate > 0.0 && pretrain.mask_rate < 1.0)) throw ConfigError("mask rate must be in (0, 1)");
}

// ---------------------------------------------------------------------------
// Model

Model::Output Model::forward(const TokenBatch &batch, bool training, Rng *rng, bool want_contacts) const {
    const bool collect = want_contacts || head.config().needs_contacts();
    EncoderOutput enc = encoder.forward(batch, collect);
    Output out;
    out.residue_mask = batch.residue_mask();
    if (collect) {
        out.contacts = contact_probabilities(enc.layer_attn, contact);
        out.has_contacts = true;
    }
    out.logits = head.forward(enc.hidden, out.residue_mask, out.has_contacts ? &out.contacts : nullptr, training, rng);
    return out;
}

ParamList Model::adapter_parameters() const {
    ParamList out;
    for (auto &[name, t] : encoder.parameters())
        if (name.ends_with(".lora_a") || name.ends_with(".lora_b")) out.emplace_back(name, t);
    return out;
}

ParamList Model::finetune_parameters() const {
    ParamList out = adapter_parameters();
    contact.collect(out, "contact");
    for (auto &p : head.parameters()) out.push_back(p);
    return out;
}

ParamList Model::trainable_parameters() const {
    ParamList out;
    for (auto &[name, t] : encoder.parameters())
        if (t.requires_grad()) out.emplace_back(name, t);
    ParamList rest;
    contact.collect(rest, "contact");
    for (auto &p : head.parameters()) rest.push_back(p);
    for (auto &p : rest)
        if (p.second.requires_grad()) out.push_back(p);
    return out;
}

ParamReport Model::param_report() const {
    ParamList contact_params;
    contact.collect(contact_params, "contact");
    return trainable_param_report({{"encoder", encoder.base_parameters()},
                                   {"lora", adapter_parameters()},
                                   {"contact_head", contact_params},
                                   {"head", head.parameters()}});
}

Encoder copy_encoder(const Encoder &src) {
    Rng scratch(0);
    Encoder dst(src.config(), scratch);
    Encoder &mutable_dst = dst;
    auto src_layers = src.layers();
    for (std::size_t i = 0; i < src_layers.size(); ++i) {
        auto &sl = src_layers[i];
        auto &dl = mutable_dst.layers()[i];
        const std::pair<const Linear *, Linear *> maps[] = {
            {&sl.attn.query, &dl.attn.query}, {&sl.attn.key, &dl.attn.key}, {&sl.attn.value, &dl.attn.value}, {&sl.attn.dense, &dl.attn.dense}};
        for (auto [s, d] : maps) {
            if (s->lora) {
                LoraAdapter a;
                a.a = s->lora->a.clone();
                a.b = s->lora->b.clone();
                a.alpha = s->lora->alpha;
                d->lora = a;
            }
        }
    }
    const ParamList from = src.parameters();
    const ParamList to = dst.parameters();
    for (std::size_t i = 0; i < from.size(); ++i) {
        Tensor t = to[i].second;
        std::copy(from[i].second.data().begin(), from[i].second.data().end(), t.mutable_data().begin());
        t.set_requires_grad(from[i].second.requires_grad());
    }
    return dst;
}

Model build_model(const Encoder &base, const RunConfig &cfg) {
    cfg.validate();
    if (!(base.config() == cfg.encoder)) throw LoadError("base encoder shape does not match the run configuration");
    Model m;
    m.encoder = copy_encoder(base);
    m.task = cfg.task;
    m.lora = cfg.lora;
    if (cfg.lora) {
        inject(m.encoder, *cfg.lora);
    } else {
        set_trainable(m.encoder.parameters(), false);
    }
    Rng rng(cfg.seed);
    Rng contact_rng = rng.fork();
    Rng head_rng = rng.fork();
    m.contact = ContactHeadParams(cfg.encoder.n_layers, contact_rng);
    m.head = Head(cfg.head, cfg.encoder.d_model, head_rng);
    return m;
}

Tensor task_loss(const Model &model, const TokenBatch &batch, bool training, Rng *rng) {
    const auto out = model.forward(batch, training, rng);
    const std::size_t B = batch.rows();
    const TaskSpec &task = model.task;
    switch (task.kind) {
    case TaskKind::kSeqMultilabel: {
        std::vector<double> y;
        for (const auto &l : batch.labels) {
            const auto &bits = std::get<std::vector<double>>(l);
            y.insert(y.end(), bits.begin(), bits.end());
        }
        return ml_bce(sigmoid(out.logits), Tensor({B, task.num_classes}, std::move(y)));
    }
    case TaskKind::kSeqMulticlass: {
        std::vector<std::size_t> y;
        for (const auto &l : batch.labels) y.push_back(std::get<std::size_t>(l));
        return cross_entropy(out.logits, y);
    }
    case TaskKind::kTokenMulticlass: {
        std::vector<std::size_t> rows, y;
        for (std::size_t b = 0; b < B; ++b) {
            const auto &t = std::get<std::vector<std::size_t>>(batch.labels[b]);
            for (std::size_t j = 0; j < batch.lengths[b]; ++j) {
                rows.push_back(b * batch.width + j + 1);
                y.push_back(t[j]);
            }
        }
        const Tensor flat = reshape(out.logits, {B * batch.width, task.num_classes});
        return cross_entropy(gather_rows(flat, rows), y);
    }
    case TaskKind::kSeqRegression: {
        std::vector<double> y;
        for (const auto &l : batch.labels) y.push_back(std::get<double>(l));
        return mse(reshape(out.logits, {B}), Tensor({B}, std::move(y)));
    }
    }
    throw ContractError("unhandled task kind");
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto &[name, p] : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::step() {
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor p = params_[i].second;
        if (!p.requires_grad() || !p.has_grad()) continue;
        const auto g = p.grad();
        auto w = p.mutable_data();
        auto &m = m_[i];
        auto &v = v_[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            w[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (auto [name, p] : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------
// Prediction and scoring

std::vector<Prediction> predict_records(const Model &model, const std::vector<Record> &records, std::size_t batch_size) {
    NoGradGuard guard;
    Rng unused(0);
    const auto batches = make_batches(records, batch_size, unused, false);
    std::vector<Prediction> preds;
    const TaskSpec &task = model.task;
    for (const auto &batch : batches) {
        const auto out = model.forward(batch);
        const auto logits = out.logits.data();
        const std::size_t C = task.out_dim();
        for (std::size_t b = 0; b < batch.rows(); ++b) {
            Prediction p;
            p.id = batch.record_ids[b];
            switch (task.kind) {
            case TaskKind::kSeqMultilabel: {
                std::vector<double> probs(C);
                const Tensor s = sigmoid(Tensor({C}, std::vector<double>(logits.begin() + static_cast<std::ptrdiff_t>(b * C),
                                                                         logits.begin() + static_cast<std::ptrdiff_t>((b + 1) * C))));
                std::copy(s.data().begin(), s.data().end(), probs.begin());
                p.value = std::move(probs);
                break;
            }
            case TaskKind::kSeqMulticlass: {
                const Tensor s = softmax(Tensor({C}, std::vector<double>(logits.begin() + static_cast<std::ptrdiff_t>(b * C),
                                                                         logits.begin() + static_cast<std::ptrdiff_t>((b + 1) * C))),
                                         0);
                p.scores.assign(s.data().begin(), s.data().end());
                p.value = static_cast<std::size_t>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
                break;
            }
            case TaskKind::kTokenMulticlass: {
                std::vector<std::size_t> classes;
                for (std::size_t j = 1; j <= batch.lengths[b]; ++j) {
                    const double *row = logits.data() + (b * batch.width + j) * C;
                    classes.push_back(static_cast<std::size_t>(std::max_element(row, row + C) - row));
                }
                p.value = std::move(classes);
                break;
            }
            case TaskKind::kSeqRegression: {
                const double v = logits[b];
                p.value = model.standardizer ? model.standardizer->inverse(v) : v;
                break;
            }
            }
            preds.push_back(std::move(p));
        }
    }
    return preds;
}

double score_predictions(const TaskSpec &task, const std::vector<Prediction> &preds, const std::vector<Record> &records) {
    if (preds.size() != records.size()) throw ShapeError("prediction count does not match record count");
    switch (task.metric) {
    case MetricKind::kF1Max: {
        std::vector<std::vector<double>> p, y;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            p.push_back(std::get<std::vector<double>>(preds[i].value));
            y.push_back(std::get<std::vector<double>>(records[i].label));
        }
        return f1_max(p, y).f1;
    }
    case MetricKind::kAccuracy: {
        std::vector<std::size_t> p, y;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (task.kind == TaskKind::kTokenMulticlass) {
                const auto &pt = std::get<std::vector<std::size_t>>(preds[i].value);
                const auto &yt = std::get<std::vector<std::size_t>>(records[i].label);
                p.insert(p.end(), pt.begin(), pt.end());
                y.insert(y.end(), yt.begin(), yt.end());
            } else {
                p.push_back(std::get<std::size_t>(preds[i].value));
                y.push_back(std::get<std::size_t>(records[i].label));
            }
        }
        return accuracy(p, y);
    }
    case MetricKind::kSpearman:
    case MetricKind::kR2: {
        std::vector<double> p, y;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            p.push_back(std::get<double>(preds[i].value));
            y.push_back(std::get<double>(records[i].label));
        }
        return task.metric == MetricKind::kSpearman ? spearman_rho(p, y) : r_squared(p, y);
    }
    }
    throw ContractError("unhandled metric");
}

// ---------------------------------------------------------------------------
// RunReport

std::string RunReport::to_text() const {
    std::ostringstream out;
    out << "[run]\n";
    out << "command = " << command << "\n";
    out << "status = " << status << "\n";
    out << "seed = " << seed << "\n";
    out << "metric = " << metric << "\n";
    for (const auto &[k, v] : config.entries()) out << "config." << k << " = " << v << "\n";
    out << "params.trainable = " << trainable_params << "\n";
    out << "params.frozen = " << frozen_params << "\n";
    out << "optimizer_steps = " << optimizer_steps << "\n";
    out << "unknown_residues = " << unknown_residues << "\n";
    out << "base_hash_before = " << base_hash_before << "\n";
    out << "base_hash_after = " << base_hash_after << "\n";
    out << "epoch_train_loss = " << join(train_loss) << "\n";
    out << "epoch_test_metric = " << join(test_metric) << "\n";
    out << "epoch_train_metric = " << join(train_metric) << "\n";
    out << "final_metric = " << fmt_double(final_metric) << "\n";
    for (const auto &[k, v] : extras) out << "extra." << k << " = " << fmt_double(v) << "\n";
    out << "wall_clock_s = " << fmt_double(wall_clock_s) << "\n";
    out << "[end]\n";
    return out.str();
}

std::vector<RunReport> RunReport::parse_all(const std::string &text) {
    std::vector<RunReport> reports;
    std::istringstream in(text);
    std::string line;
    RunReport *cur = nullptr;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "[run]") {
            reports.emplace_back();
            cur = &reports.back();
            continue;
        }
        if (line == "[end]") {
            cur = nullptr;
            continue;
        }
        if (!cur || line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw DataError("malformed report line '" + line + "'");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
        try {
            if (key == "command") cur->command = value;
            else if (key == "status") cur->status = value;
            else if (key == "seed") cur->seed = std::stoull(value);
            else if (key == "metric") cur->metric = value;
            else if (key.starts_with("config.")) cur->config.set(key.substr(7), value);
            else if (key == "params.trainable") cur->trainable_params = std::stoull(value);
            else if (key == "params.frozen") cur->frozen_params = std::stoull(value);
            else if (key == "optimizer_steps") cur->optimizer_steps = std::stoull(value);
            else if (key == "unknown_residues") cur->unknown_residues = std::stoull(value);
            else if (key == "base_hash_before") cur->base_hash_before = std::stoull(value);
            else if (key == "base_hash_after") cur->base_hash_after = std::stoull(value);
            else if (key == "epoch_train_loss") cur->train_loss = split_doubles(value);
            else if (key == "epoch_test_metric") cur->test_metric = split_doubles(value);
            else if (key == "epoch_train_metric") cur->train_metric = split_doubles(value);
            else if (key == "final_metric") cur->final_metric = std::stod(value);
            else if (key.starts_with("extra.")) cur->extras[key.substr(6)] = std::stod(value);
            else if (key == "wall_clock_s") cur->wall_clock_s = std::stod(value);
        } catch (const std::exception &) {
            throw DataError("report field " + key + " has unparseable value '" + value + "'");
        }
    }
    return reports;
}

std::map<std::string, std::string> RunReport::numeric_fields() const {
    std::map<std::string, std::string> f;
    f["seed"] = std::to_string(seed);
    f["params.trainable"] = std::to_string(trainable_params);
    f["params.frozen"] = std::to_string(frozen_params);
    f["optimizer_steps"] = std::to_string(optimizer_steps);
    f["unknown_residues"] = std::to_string(unknown_residues);
    f["base_hash_before"] = std::to_string(base_hash_before);
    f["base_hash_after"] = std::to_string(base_hash_after);
    f["epoch_train_loss"] = join(train_loss);
    f["epoch_test_metric"] = join(test_metric);
    f["epoch_train_metric"] = join(train_metric);
    f["final_metric"] = fmt_double(final_metric);
    for (const auto &[k, v] : extras) f["extra." + k] = fmt_double(v);
    return f;
}

// ---------------------------------------------------------------------------
// Pretraining

PretrainResult pretrain_mlm(const RunConfig &cfg, const std::vector<FastaEntry> &corpus) {
    cfg.validate();
    if (corpus.empty()) throw DataError("pretraining corpus is empty");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TokenizedSequence> seqs;
    std::size_t unknown = 0;
    for (const auto &e : corpus) {
        if (e.sequence.size() + 2 > cfg.encoder.max_len)
            throw DataError("length error: sequence " + e.id + " has " + std::to_string(e.sequence.size()) +
                            " residues, max_len allows " + std::to_string(cfg.encoder.max_len - 2));
        seqs.push_back(encode(e.sequence));
        unknown += seqs.back().unknown;
    }

    Rng root(cfg.seed);
    Rng init_rng = root.fork();
    Rng order_rng = root.fork();
    Rng mask_rng = root.fork();
    PretrainResult result{Encoder(cfg.encoder, init_rng), {}};
    Encoder &enc = result.encoder;
    Adam opt(enc.parameters(), cfg.pretrain.lr);

    std::vector<std::size_t> order(seqs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();
    std::vector<double> losses;
    for (std::size_t step = 0; step < cfg.pretrain.steps; ++step) {
        std::vector<TokenizedSequence> masked_inputs;
        std::vector<std::pair<std::size_t, std::size_t>> positions;  // (row, column)
        std::vector<std::size_t> targets;
        for (std::size_t i = 0; i < cfg.pretrain.batch_size; ++i) {
            if (cursor == order.size()) {
                order_rng.shuffle(order);
                cursor = 0;
            }
            const auto &seq = seqs[order[cursor++]];
            const MaskedSequence m = mask_for_mlm(seq, cfg.pretrain.mask_rate, mask_rng);
            TokenizedSequence t = seq;
            t.ids = m.ids;
            masked_inputs.push_back(std::move(t));
            for (std::size_t j = 0; j < m.masked.size(); ++j)
                if (m.masked[j]) {
                    positions.emplace_back(i, j);
                    targets.push_back(m.targets[j]);
                }
        }
        const TokenBatch batch = collate(masked_inputs);
        std::vector<std::size_t> rows;
        for (auto [i, j] : positions) rows.push_back(i * batch.width + j);
        const EncoderOutput out = enc.forward(batch);
        const Tensor logits = reshape(enc.mlm_logits(out.hidden), {batch.rows() * batch.width, Vocabulary::kSize});
        const Tensor loss = cross_entropy(gather_rows(logits, rows), targets);
        if (!std::isfinite(loss.item())) throw NumericError("non-finite MLM loss at step " + std::to_string(losses.size()));
        opt.zero_grad();
        loss.backward();
        opt.step();
        losses.push_back(loss.item());
    }

    RunReport &r = result.report;
    r.command = "pretrain";
    r.seed = cfg.seed;
    r.metric = "mlm_loss";
    r.config = cfg.to_map();
    r.train_loss = losses;
    const std::size_t tail = std::min<std::size_t>(20, losses.size());
    const double final_loss = std::accumulate(losses.end() - static_cast<std::ptrdiff_t>(tail), losses.end(), 0.0) / static_cast<double>(tail);
    r.final_metric = final_loss;
    r.extras["initial_loss"] = losses.front();
    r.extras["final_loss"] = final_loss;
    r.extras["log_vocab"] = std::log(static_cast<double>(Vocabulary::kSize));
    r.trainable_params = count_values(enc.parameters());
    r.optimizer_steps = opt.steps();
    r.unknown_residues = unknown;
    r.base_hash_after = hash_params(enc.base_parameters());
    r.wall_clock_s = seconds_since(t0);
    return result;
}

// ---------------------------------------------------------------------------
// Finetuning

namespace {

void check_lengths(const std::vector<Record> &records, const EncoderConfig &enc) {
    for (const auto &r : records)
        if (r.sequence.size() + 2 > enc.max_len)
            throw DataError("length error: record " + r.id + " has " + std::to_string(r.sequence.size()) +
                            " residues, max_len allows " + std::to_string(enc.max_len - 2));
}

std::size_t count_unknown(const std::vector<Record> &records) {
    std::size_t n = 0;
    for (const auto &r : records)
        for (char c : r.sequence) n += Vocabulary::standard().residue_id(c) == Vocabulary::kUnk;
    return n;
}

} // namespace

FinetuneResult finetune(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                        const std::vector<Record> &test) {
    cfg.validate();
    if (train.empty() || test.empty()) throw DataError("finetuning needs non-empty train and test splits");
    for (std::size_t i = 0; i < train.size(); ++i) validate_record(train[i], cfg.task, "train record " + train[i].id);
    for (std::size_t i = 0; i < test.size(); ++i) validate_record(test[i], cfg.task, "test record " + test[i].id);
    check_lengths(train, cfg.encoder);
    check_lengths(test, cfg.encoder);
    const auto t0 = std::chrono::steady_clock::now();

    FinetuneResult result{build_model(base, cfg), {}};
    Model &model = result.model;
    RunReport &report = result.report;
    report.base_hash_before = hash_params(model.encoder.base_parameters());

    std::vector<Record> fit = train;
    if (cfg.task.kind == TaskKind::kSeqRegression && cfg.task.standardize) {
        auto [scaled, s] = standardize_targets(train);
        fit = std::move(scaled);
        model.standardizer = s;
    }

    Rng root(cfg.seed);
    root.fork();  // keeps streams distinct from build_model's draws
    root.fork();
    Rng shuffle_rng = root.fork();
    Rng dropout_rng = root.fork();
    Adam opt(model.trainable_parameters(), cfg.lr);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = make_batches(fit, cfg.batch_size, shuffle_rng, cfg.shuffle);
        // Accumulation groups: consecutive batches covering `accumulation` samples.
        std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end)
        std::vector<std::size_t> group_samples;
        for (std::size_t i = 0, seen = 0, begin = 0; i < batches.size(); ++i) {
            seen += batches[i].rows();
            if (seen >= cfg.accumulation || i + 1 == batches.size()) {
                groups.emplace_back(begin, i + 1);
                group_samples.push_back(seen);
                begin = i + 1;
                seen = 0;
            }
        }
        double loss_sum = 0.0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            opt.zero_grad();
            for (std::size_t i = groups[g].first; i < groups[g].second; ++i) {
                const Tensor loss = task_loss(model, batches[i], true, &dropout_rng);
                if (!std::isfinite(loss.item())) throw NumericError("non-finite training loss in epoch " + std::to_string(epoch + 1));
                const double weight = static_cast<double>(batches[i].rows()) / static_cast<double>(group_samples[g]);
                scale(loss, weight).backward();
                loss_sum += loss.item() * static_cast<double>(batches[i].rows());
            }
            opt.step();
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(fit.size()));
        report.test_metric.push_back(score_predictions(cfg.task, predict_records(model, test), test));
        if (cfg.train_metric) report.train_metric.push_back(score_predictions(cfg.task, predict_records(model, train), train));
    }

    const ParamReport params = model.param_report();
    report.command = "finetune";
    report.seed = cfg.seed;
    report.metric = metric_name(cfg.task.metric);
    report.config = cfg.to_map();
    report.final_metric = report.test_metric.back();
    report.trainable_params = params.totals.trainable;
    report.frozen_params = params.totals.frozen;
    report.optimizer_steps = opt.steps();
    report.unknown_residues = count_unknown(train) + count_unknown(test);
    report.base_hash_after = hash_params(model.encoder.base_parameters());
    if (model.standardizer) {
        report.extras["target_mean"] = model.standardizer->mean;
        report.extras["target_std"] = model.standardizer->std;
    }
    report.wall_clock_s = seconds_since(t0);
    return result;
}

RunReport evaluate(const Model &model, const std::vector<Record> &test) {
    const auto t0 = std::chrono::steady_clock::now();
    if (test.empty()) throw DataError("evaluation split is empty");
    for (const auto &r : test) validate_record(r, model.task, "record " + r.id);
    check_lengths(test, model.encoder.config());
    RunReport report;
    report.command = "evaluate";
    report.metric = metric_name(model.task.metric);
    report.final_metric = score_predictions(model.task, predict_records(model, test), test);
    report.test_metric.push_back(report.final_metric);
    const ParamReport params = model.param_report();
    report.trainable_params = params.totals.trainable;
    report.frozen_params = params.totals.frozen;
    report.unknown_residues = count_unknown(test);
    report.base_hash_before = report.base_hash_after = hash_params(model.encoder.base_parameters());
    report.wall_clock_s = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Sweeps

LrSearchResult lr_search(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                         const std::vector<Record> &test) {
    LrSearchResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (double lr : kLearningRateGrid) {
        RunConfig probe = cfg;
        probe.lr = lr;
        probe.epochs = kLrProbeEpochs;
        probe.train_metric = false;
        const double metric = finetune(probe, base, train, test).report.final_metric;
        result.probes.emplace_back(lr, metric);
        if (metric > best) {
            best = metric;
            result.best_lr = lr;
        }
    }
    return result;
}

std::vector<SweepCell> sweep(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                             const std::vector<Record> &test, const SweepOptions &opts) {
    if (opts.ranks.empty() || opts.targets.empty()) throw ConfigError("sweep needs non-empty rank and target lists");
    std::vector<SweepCell> cells;
    for (const auto &targets : opts.targets) {
        for (std::size_t rank : opts.ranks) {
            SweepCell cell;
            cell.rank = rank;
            cell.targets = targets;
            RunConfig c = cfg;
            LoraConfig l = cfg.lora.value_or(LoraConfig{});
            l.rank = rank;
            l.targets = targets;
            c.lora = l;
            cell.lr = c.lr;
            try {
                if (opts.lr_search) {
                    const auto search = lr_search(c, base, train, test);
                    c.lr = cell.lr = search.best_lr;
                    for (const auto &[lr, metric] : search.probes) cell.report.extras["lr_probe_" + fmt_double(lr)] = metric;
                }
                auto extras = cell.report.extras;
                cell.report = finetune(c, base, train, test).report;
                cell.report.extras.insert(extras.begin(), extras.end());
            } catch (const Error &e) {
                cell.report.command = "finetune";
                cell.report.status = std::string("error: ") + e.what();
            }
            cell.report.extras["lora_rank"] = static_cast<double>(rank);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string sweep_table_tsv(const std::vector<SweepCell> &cells) {
    std::ostringstream out;
    out << "targets\trank\tlr\ttrainable\tfrozen\tfinal_metric\tstatus\n";
    for (const auto &c : cells)
        out << format_targets(c.targets) << '\t' << c.rank << '\t' << fmt_double(c.lr) << '\t' << c.report.trainable_params << '\t'
            << c.report.frozen_params << '\t' << fmt_double(c.report.final_metric) << '\t' << c.report.status << '\n';
    return out.str();
}

std::string sweep_table_grid(const std::vector<SweepCell> &cells) {
    std::vector<std::size_t> ranks;
    std::vector<TargetSet> rows;
    for (const auto &c : cells) {
        if (std::find(ranks.begin(), ranks.end(), c.rank) == ranks.end()) ranks.push_back(c.rank);
        if (std::find(rows.begin(), rows.end(), c.targets) == rows.end()) rows.push_back(c.targets);
    }
    std::ostringstream out;
    out << "targets";
    for (auto r : ranks) out << "\tr=" << r;
    out << '\n';
    for (const auto &row : rows) {
        out << format_targets(row);
        for (auto r : ranks) {
            out << '\t';
            for (const auto &c : cells)
                if (c.rank == r && c.targets == row) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.4f", c.report.final_metric);
                    out << (c.report.status == "ok" ? buf : "ERR");
                }
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint base_checkpoint(const Encoder &encoder) {
    Metadata meta;
    meta["kind"] = "base";
    const auto &c = encoder.config();
    meta["encoder.n_layers"] = std::to_string(c.n_layers);
    meta["encoder.n_heads"] = std::to_string(c.n_heads);
    meta["encoder.d_model"] = std::to_string(c.d_model);
    meta["encoder.d_ff"] = std::to_string(c.d_ff);
    meta["encoder.max_len"] = std::to_string(c.max_len);
    return make_checkpoint(encoder.base_parameters(), std::move(meta));
}

Encoder encoder_from_checkpoint(const Checkpoint &ckpt) {
    if (ckpt.meta.count("kind") == 0 || ckpt.meta.at("kind") != "base") throw LoadError("checkpoint is not a base encoder checkpoint");
    ConfigMap m;
    for (const auto &[k, v] : ckpt.meta) m.set(k, v);
    EncoderConfig cfg;
    cfg.n_layers = m.get_size("encoder.n_layers", 0);
    cfg.n_heads = m.get_size("encoder.n_heads", 0);
    cfg.d_model = m.get_size("encoder.d_model", 0);
    cfg.d_ff = m.get_size("encoder.d_ff", 0);
    cfg.max_len = m.get_size("encoder.max_len", 0);
    Rng scratch(0);
    Encoder enc(cfg, scratch);
    load_into(enc.base_parameters(), ckpt, true);
    return enc;
}

Checkpoint finetune_checkpoint(const Model &model, const RunConfig &cfg, std::uint64_t base_hash) {
    Metadata meta;
    meta["kind"] = "finetune";
    const ConfigMap cfg_map = cfg.to_map();
    for (const auto &[k, v] : cfg_map.entries()) meta["config." + k] = v;
    meta["base_hash"] = std::to_string(base_hash);
    if (model.standardizer) {
        meta["target_mean"] = fmt_double(model.standardizer->mean);
        meta["target_std"] = fmt_double(model.standardizer->std);
    }
    return make_checkpoint(model.finetune_parameters(), std::move(meta));
}

Model model_from_checkpoints(const Checkpoint &base, const Checkpoint &finetuned) {
    if (finetuned.meta.count("kind") == 0 || finetuned.meta.at("kind") != "finetune")
        throw LoadError("checkpoint is not a finetune checkpoint");
    ConfigMap m;
    for (const auto &[k, v] : finetuned.meta)
        if (k.starts_with("config.")) m.set(k.substr(7), v);
    const RunConfig cfg = RunConfig::from_map(m);
    const Encoder enc = encoder_from_checkpoint(base);
    if (!(enc.config() == cfg.encoder)) throw LoadError("base checkpoint encoder shape does not match the finetune checkpoint");
    if (finetuned.meta.count("base_hash") && finetuned.meta.at("base_hash") != std::to_string(hash_params(enc.base_parameters())))
        throw LoadError("base checkpoint differs from the one used for finetuning (hash mismatch)");
    Model model = build_model(enc, cfg);
    load_into(model.finetune_parameters(), finetuned, true);
    if (finetuned.meta.count("target_mean")) {
        Standardizer s;
        s.mean = std::stod(finetuned.meta.at("target_mean"));
        s.std = std::stod(finetuned.meta.at("target_std"));
        model.standardizer = s;
    }
    return model;
}

void write_contact_maps(const std::filesystem::path &path, const std::vector<std::string> &ids,
                        const std::vector<ContactMap> &maps) {
    if (ids.size() != maps.size()) throw ShapeError("contact map count does not match id count");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const std::size_t L = maps[i].length();
        out << "# " << ids[i] << " L=" << L << '\n';
        const auto v = maps[i].probs.data();
        for (std::size_t r = 0; r < L; ++r) {
            for (std::size_t c = 0; c < L; ++c) out << (c ? "\t" : "") << fmt_double(v[r * L + c]);
            out << '\n';
        }
    }
}

std::vector<ContactMap> predict_contacts(const Model &model, const std::vector<Record> &records, std::size_t batch_size) {
    NoGradGuard guard;
    Rng unused(0);
    std::vector<ContactMap> maps;
    for (const auto &batch : make_batches(records, batch_size, unused, false)) {
        const auto out = model.forward(batch, false, nullptr, true);
        for (auto &m : strip_special(out.contacts, batch)) maps.push_back(std::move(m));
    }
    return maps;
}

} // namespace plm
