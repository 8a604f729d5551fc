// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include "oracles/oracles.hpp"

#include "plm/contact.hpp"
#include "plm/encoder.hpp"
#include "plm/gradcheck.hpp"
#include "plm/heads.hpp"
#include "plm/lora.hpp"
#include "plm/losses.hpp"
#include "plm/metrics.hpp"
#include "plm/ops.hpp"
#include "plm/tokenizer.hpp"
#include "plm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace plm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<std::string> random_sequences(Rng &rng, std::size_t n, std::size_t lo, std::size_t hi) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = lo + rng.below(hi - lo + 1);
        std::string s;
        for (std::size_t j = 0; j < len; ++j) s.push_back(Vocabulary::kResidues[rng.below(Vocabulary::kResidues.size())]);
        out.push_back(s);
    }
    return out;
}

TokenBatch batch_of(const std::vector<std::string> &seqs, std::size_t min_width = 0) {
    std::vector<TokenizedSequence> toks;
    for (const auto &s : seqs) toks.push_back(encode(s));
    return collate(toks, {}, {}, min_width);
}

RunConfig toy_run(TaskKind kind, HeadKind head, bool lora, std::uint64_t seed) {
    ConfigMap m;
    m.set("seed", std::to_string(seed));
    m.set("encoder.n_layers", "2");
    m.set("encoder.n_heads", "2");
    m.set("encoder.d_model", "16");
    m.set("encoder.d_ff", "32");
    m.set("encoder.max_len", "24");
    m.set("head.kind", head_kind_name(head));
    m.set("head.latent_dim", "6");
    m.set("head.n_heads", "2");
    m.set("head.feature_dim", "4");
    m.set("head.dropout", "0");
    m.set("lora.enabled", lora ? "true" : "false");
    m.set("lora.rank", "4");
    m.set("task.kind", task_kind_name(kind));
    m.set("task.num_classes", kind == TaskKind::kSeqRegression ? "1" : "3");
    return RunConfig::from_map(m);
}

// Desk-scale encoder shared by the learning-signal runs.
RunConfig desk_run(TaskKind kind, HeadKind head, std::uint64_t seed) {
    ConfigMap m;
    m.set("seed", std::to_string(seed));
    m.set("encoder.n_layers", "2");
    m.set("encoder.n_heads", "4");
    m.set("encoder.d_model", "32");
    m.set("encoder.d_ff", "128");
    m.set("encoder.max_len", "64");
    m.set("head.kind", head_kind_name(head));
    m.set("head.latent_dim", "16");
    m.set("head.n_heads", "4");
    m.set("head.feature_dim", "16");
    m.set("lora.rank", "8");
    m.set("task.kind", task_kind_name(kind));
    m.set("task.num_classes", kind == TaskKind::kSeqRegression ? "1" : "3");
    m.set("train.lr", "0.0005");
    return RunConfig::from_map(m);
}

// Nonzero values for parameters that start at zero, so every gradient
// path carries signal.
void activate(const Model &m, Rng &rng) {
    for (const auto &[name, t] : m.trainable_parameters())
        if (name.find("lora_b") != std::string::npos || name.find("prediction.weight") != std::string::npos)
            for (double &v : Tensor(t).mutable_data()) v = rng.normal(0.0, 0.3);
}

// Gradient suite.
Outcome criterion1() {
    double worst = 0.0;
    std::size_t checked = 0;
    std::string where;
    for (HeadKind head : {HeadKind::kSmh, HeadKind::kMah, HeadKind::kCmMah})
        for (bool lora : {false, true}) {
            const RunConfig cfg = toy_run(TaskKind::kSeqRegression, head, lora, 21);
            Rng rng(cfg.seed);
            const Model m = build_model(Encoder(cfg.encoder, rng), cfg);
            activate(m, rng);
            const auto recs = synth_task(TaskKind::kSeqRegression, 6, 8, 5).first;
            Rng brng(2);
            const TokenBatch batch = make_batches(recs, 3, brng, false).at(0);
            const auto r = check_gradients([&] { return task_loss(m, batch); }, m.trainable_parameters());
            checked += r.checked;
            if (r.max_rel_error >= worst) {
                worst = r.max_rel_error;
                where = head_kind_name(head) + (lora ? "+lora " : " ") + r.worst;
            }
        }
    return {worst < 1e-4, std::to_string(checked) + " coordinates, worst rel err " + fmt(worst) + " at " + where};
}

// Zero-init equivalence over every ablation target set.
Outcome criterion2() {
    Rng rng(22);
    const EncoderConfig ec = toy_run(TaskKind::kSeqRegression, HeadKind::kSmh, true, 22).encoder;
    const Encoder base(ec, rng);
    const TokenBatch batch = batch_of(random_sequences(rng, 6, 4, 18));
    const EncoderOutput ref = base.forward(batch, true);
    double worst = 0.0;
    std::size_t sets = 0;
    for (const TargetSet &targets : ablation_target_sets()) {
        Encoder adapted = copy_encoder(base);
        inject(adapted, LoraConfig{4, 8.0, targets, 5});
        const EncoderOutput out = adapted.forward(batch, true);
        worst = std::max(worst, max_abs_diff(ref.hidden.data(), out.hidden.data()));
        for (std::size_t l = 0; l < ref.layer_attn.size(); ++l)
            worst = std::max(worst, max_abs_diff(ref.layer_attn[l].data(), out.layer_attn[l].data()));
        ++sets;
    }
    return {sets == 14 && worst <= 1e-15, std::to_string(sets) + " target sets, max diff " + fmt(worst)};
}

// Merge equivalence.
Outcome criterion3() {
    Rng rng(23);
    const EncoderConfig ec = toy_run(TaskKind::kSeqRegression, HeadKind::kSmh, true, 23).encoder;
    const Encoder base(ec, rng);
    double worst = 0.0;
    std::size_t probes = 0;
    for (const TargetSet &targets : ablation_target_sets()) {
        Encoder adapted = copy_encoder(base);
        inject(adapted, LoraConfig{4, 8.0, targets, 6});
        for (const auto &[name, t] : adapted.parameters())
            if (name.find("lora_b") != std::string::npos)
                for (double &v : Tensor(t).mutable_data()) v = rng.normal(0.0, 0.3);
        Encoder merged = copy_encoder(adapted);
        merge_all(merged);
        for (int chunk = 0; chunk < 10; ++chunk) {
            const TokenBatch batch = batch_of(random_sequences(rng, 10, 1, 20));
            worst = std::max(worst, max_abs_diff(adapted.forward(batch).hidden.data(), merged.forward(batch).hidden.data()));
            probes += batch.rows();
        }
    }
    return {worst < 1e-10, std::to_string(probes) + " probes over 14 target sets, max diff " + fmt(worst)};
}

// Frozen base across a 5-epoch finetune.
Outcome criterion4() {
    RunConfig cfg = toy_run(TaskKind::kSeqRegression, HeadKind::kCmMah, true, 24);
    cfg.epochs = 5;
    cfg.train_metric = false;
    Rng rng(cfg.seed);
    const Encoder base(cfg.encoder, rng);
    const std::uint64_t before = hash_params(base.base_parameters());
    const auto [train, test] = synth_task(TaskKind::kSeqRegression, 48, 16, 24);
    const auto result = finetune(cfg, base, train, test);
    const std::uint64_t after = hash_params(base.base_parameters());
    const std::uint64_t inside = hash_params(result.model.encoder.base_parameters());
    bool adapters_moved = false;
    for (const auto &[name, t] : result.model.adapter_parameters())
        if (name.find("lora_b") != std::string::npos)
            for (double v : t.data()) adapters_moved = adapters_moved || v != 0.0;
    const bool ok = before == after && before == inside && result.report.base_hash_before == result.report.base_hash_after &&
                    adapters_moved && result.report.optimizer_steps > 0;
    return {ok, std::to_string(result.report.optimizer_steps) + " updates, base hash " + std::to_string(before) +
                    (before == inside ? " unchanged" : " CHANGED") + (adapters_moved ? ", adapters trained" : ", adapters idle")};
}

// Contact maps and the P = 1 identity.
Outcome criterion5() {
    RunConfig cfg = toy_run(TaskKind::kSeqRegression, HeadKind::kCmMah, true, 25);
    Rng rng(cfg.seed);
    const Model m = build_model(Encoder(cfg.encoder, rng), cfg);
    const auto recs = synth_task(TaskKind::kSeqRegression, 16, 20, 25).first;
    const auto maps = predict_contacts(m, recs, 4);
    bool symmetric = maps.size() == recs.size(), inside = true, stripped = true;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const std::size_t l = maps[i].length();
        stripped = stripped && l == recs[i].sequence.size() && maps[i].probs.shape()[1] == l;
        const auto p = maps[i].probs.data();
        for (std::size_t a = 0; a < l; ++a)
            for (std::size_t b = 0; b < l; ++b) {
                symmetric = symmetric && p[a * l + b] == p[b * l + a];
                inside = inside && p[a * l + b] > 0.0 && p[a * l + b] < 1.0;
            }
    }
    double worst = 0.0;
    for (bool token : {false, true}) {
        HeadConfig hc = cfg.head;
        hc.out_dim = 3;
        hc.token_level = token;
        hc.kind = HeadKind::kMah;
        Rng r1(9), r2(9), pr(10);
        Head mah(hc, 16, r1);
        hc.kind = HeadKind::kCmMah;
        Head cm(hc, 16, r2);
        for (double &v : mah.prediction().weight.mutable_data()) v = pr.normal(0.0, 0.5);
        std::ranges::copy(mah.prediction().weight.data(), cm.prediction().weight.mutable_data().begin());
        Rng hr(11);
        const Tensor hidden = randn({3, 7, 16}, 1.0, hr, false);
        const Tensor mask({3, 7}, {0, 1, 1, 1, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0});
        worst = std::max(worst, max_abs_diff(mah_forward(mah, hidden, mask).data(),
                                             cm_mah_forward(cm, hidden, Tensor::ones({3, 7, 7}), mask).data()));
    }
    return {symmetric && inside && stripped && worst <= 1e-12,
            std::to_string(maps.size()) + " maps: symmetric " + (symmetric ? "yes" : "NO") + ", in (0,1) " + (inside ? "yes" : "NO") +
                ", special tokens stripped " + (stripped ? "yes" : "NO") + "; CM-MAH(P=1) vs MAH " + fmt(worst)};
}

// Metric and loss oracles on randomized instances.
Outcome criterion6() {
    constexpr int kInstances = 60;
    oracle::SplitMix g(26);
    std::map<std::string, double> worst;
    for (int it = 0; it < kInstances; ++it) {
        const std::size_t n = 5 + g.below(16), k = 2 + g.below(5);
        {
            std::vector<std::vector<double>> p(n, std::vector<double>(k)), y(n, std::vector<double>(k));
            oracle::Vec fp, fy;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < k; ++c) {
                    y[i][c] = g.uniform() < 0.35 ? 1.0 : 0.0;
                    p[i][c] = g.uniform();
                    fp.push_back(p[i][c]);
                    fy.push_back(y[i][c]);
                }
            worst["f1_max"] = std::max(worst["f1_max"], std::abs(f1_max(p, y).f1 - oracle::f1_exhaustive(fp, fy)));
        }
        {
            const oracle::Vec p = g.vec(n, -3, 3), y = g.vec(n, -3, 3);
            worst["spearman"] = std::max(worst["spearman"], std::abs(spearman_rho(p, y) - oracle::spearman_d2(p, y)));
            worst["r2"] = std::max(worst["r2"], std::abs(r_squared(p, y) - oracle::r2_loop(p, y)));
            worst["mse"] = std::max(worst["mse"], std::abs(mse(Tensor({n}, p), Tensor({n}, y)).item() - oracle::mse_loop(p, y)));
        }
        {
            std::vector<std::size_t> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = g.below(k);
                b[i] = g.below(k);
            }
            worst["accuracy"] = std::max(worst["accuracy"], std::abs(accuracy(a, b) - oracle::accuracy_loop(a, b, {n}, n)));
        }
        {
            oracle::Vec p = g.vec(n * k, 0.0, 1.0), y(n * k);
            for (double &v : y) v = g.below(2) ? 1.0 : 0.0;
            if (it % 10 == 0) p[0] = 0.0;  // exercises the clamp
            const double got = ml_bce(Tensor({n, k}, p), Tensor({n, k}, y)).item();
            worst["bce"] = std::max(worst["bce"], std::abs(got - oracle::bce_loop(p, y, n, k, kProbClamp)));
        }
        {
            const oracle::Vec z = g.vec(n * k, -4, 4);
            std::vector<std::size_t> t(n);
            for (auto &v : t) v = g.below(k);
            worst["cross_entropy"] = std::max(worst["cross_entropy"], std::abs(cross_entropy(Tensor({n, k}, z), t).item() - oracle::ce_loop(z, t, k)));
        }
    }
    bool ok = true;
    std::string detail = std::to_string(kInstances) + " instances each;";
    for (const auto &[name, w] : worst) {
        ok = ok && w <= 1e-12;
        detail += " " + name + " " + fmt(w, 2);
    }
    return {ok, detail};
}

// Padding invariance.
Outcome criterion7() {
    Rng rng(27);
    const auto seqs = random_sequences(rng, 5, 3, 12);
    const TokenBatch tight = batch_of(seqs), loose = batch_of(seqs, tight.width + 6);
    const auto at_valid = [](const Tensor &t, const TokenBatch &b, std::size_t row, std::size_t j) {
        const std::size_t d = t.shape().back();
        const auto data = t.data();
        return std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>((row * b.width + j) * d),
                                   data.begin() + static_cast<std::ptrdiff_t>((row * b.width + j + 1) * d));
    };
    double hidden_diff = 0.0, pooled_diff = 0.0, token_diff = 0.0, seq_logit_diff = 0.0;

    RunConfig seq_cfg = toy_run(TaskKind::kSeqMulticlass, HeadKind::kCmMah, true, 27);
    Rng mrng(seq_cfg.seed);
    const Model seq_model = build_model(Encoder(seq_cfg.encoder, mrng), seq_cfg);
    activate(seq_model, mrng);
    const EncoderOutput a = seq_model.encoder.forward(tight), b = seq_model.encoder.forward(loose);
    for (std::size_t r = 0; r < tight.rows(); ++r)
        for (std::size_t j = 0; j < tight.width; ++j)
            if (tight.valid(r, j)) hidden_diff = std::max(hidden_diff, max_abs_diff(at_valid(a.hidden, tight, r, j), at_valid(b.hidden, loose, r, j)));
    const PoolingParams pool(2, 6, seq_cfg.encoder.d_model, 0.0, mrng);
    pooled_diff = max_abs_diff(attention_pool(a.hidden, pool, tight.residue_mask()).data(),
                               attention_pool(b.hidden, pool, loose.residue_mask()).data());
    seq_logit_diff = max_abs_diff(seq_model.forward(tight).logits.data(), seq_model.forward(loose).logits.data());

    const RunConfig tok_cfg = toy_run(TaskKind::kTokenMulticlass, HeadKind::kCmMah, true, 28);
    Rng trng(tok_cfg.seed);
    const Model tok_model = build_model(Encoder(tok_cfg.encoder, trng), tok_cfg);
    activate(tok_model, trng);
    const Tensor la = tok_model.forward(tight).logits, lb = tok_model.forward(loose).logits;
    for (std::size_t r = 0; r < tight.rows(); ++r)
        for (std::size_t j = 0; j < tight.width; ++j)
            if (tight.residue(r, j)) token_diff = std::max(token_diff, max_abs_diff(at_valid(la, tight, r, j), at_valid(lb, loose, r, j)));

    const double worst = std::max({hidden_diff, pooled_diff, token_diff, seq_logit_diff});
    return {worst < 1e-10, "hidden " + fmt(hidden_diff, 2) + ", pooled " + fmt(pooled_diff, 2) + ", sequence logits " +
                               fmt(seq_logit_diff, 2) + ", token logits " + fmt(token_diff, 2)};
}

struct LearningRun {
    Outcome outcome;
    std::vector<RunReport> reports;
};

// Learning signal: MLM, CM-MAH regression, LoRA vs frozen baseline.
LearningRun learning_signal() {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    LearningRun run;

    RunConfig pre = desk_run(TaskKind::kSeqRegression, HeadKind::kSmh, 1);
    const auto corpus = synth_corpus(512, 40, 1);
    const PretrainResult pretrained = pretrain_mlm(pre, corpus);
    const double initial = pretrained.report.extras.at("initial_loss"), final_loss = pretrained.report.extras.at("final_loss");
    const double reduction = 1.0 - final_loss / initial;
    const bool near_uniform = std::abs(initial - std::log(static_cast<double>(Vocabulary::kSize))) < 0.15;
    const bool a_ok = near_uniform && reduction >= 0.30 && pretrained.report.optimizer_steps <= 500;
    run.reports.push_back(pretrained.report);

    RunConfig reg = desk_run(TaskKind::kSeqRegression, HeadKind::kCmMah, 3);
    reg.epochs = 10;
    const auto [reg_train, reg_test] = synth_task(TaskKind::kSeqRegression, 1000, 40, 3);
    const RunReport reg_report = finetune(reg, pretrained.encoder, reg_train, reg_test).report;
    const double best_train = *std::max_element(reg_report.train_metric.begin(), reg_report.train_metric.end());
    const bool b_ok = best_train > 0.9;
    run.reports.push_back(reg_report);

    RunConfig lora_cfg = desk_run(TaskKind::kSeqRegression, HeadKind::kSmh, 4);
    lora_cfg.epochs = 5;
    lora_cfg.train_metric = false;
    RunConfig frozen_cfg = lora_cfg;
    frozen_cfg.lora.reset();
    const auto [cmp_train, cmp_test] = synth_task(TaskKind::kSeqRegression, 600, 40, 4);
    const RunReport with_lora = finetune(lora_cfg, pretrained.encoder, cmp_train, cmp_test).report;
    const RunReport frozen = finetune(frozen_cfg, pretrained.encoder, cmp_train, cmp_test).report;
    const bool c_ok = with_lora.final_metric >= frozen.final_metric;
    run.reports.push_back(with_lora);
    run.reports.push_back(frozen);

    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    run.outcome.pass = a_ok && b_ok && c_ok && seconds < 900.0;
    run.outcome.detail = std::string("(a) MLM ") + fmt(initial) + " -> " + fmt(final_loss) + " (-" + fmt(100 * reduction, 3) + "%) " +
                         (a_ok ? "ok" : "FAIL") + "; (b) CM-MAH train Spearman " + fmt(best_train) + (b_ok ? " ok" : " FAIL") +
                         "; (c) LoRA " + fmt(with_lora.final_metric) + " vs frozen " + fmt(frozen.final_metric) + (c_ok ? " ok" : " FAIL") +
                         "; " + fmt(seconds, 4) + " s";
    return run;
}

// Sweep over ranks and target sets with closed-form adapter counts.
Outcome criterion10() {
    ConfigMap m = desk_run(TaskKind::kSeqRegression, HeadKind::kSmh, 30).to_map();
    m.set("encoder.max_len", "24");
    m.set("encoder.d_ff", "64");
    m.set("train.epochs", "3");
    m.set("train.train_metric", "false");
    const RunConfig cfg = RunConfig::from_map(m);
    Rng rng(cfg.seed);
    const Encoder base(cfg.encoder, rng);
    const auto [train, test] = synth_task(TaskKind::kSeqRegression, 120, 20, 30);

    RunConfig no_lora = cfg;
    no_lora.lora.reset();
    const std::size_t head_params = count_values(build_model(base, no_lora).trainable_parameters());

    SweepOptions opts;
    const auto cells = sweep(cfg, base, train, test, opts);
    std::size_t ok_cells = 0, count_matches = 0;
    for (const SweepCell &c : cells) {
        ok_cells += c.report.status == "ok";
        const std::size_t closed = oracle::lora_param_count(cfg.encoder.n_layers, cfg.encoder.d_model, c.rank, c.targets.size());
        count_matches += c.report.trainable_params == closed + head_params;
    }
    std::cout << sweep_table_grid(cells);
    const std::size_t expected = kDefaultSweepRanks.size() * ablation_target_sets().size();
    return {cells.size() == expected && ok_cells == expected && count_matches == expected,
            std::to_string(ok_cells) + "/" + std::to_string(expected) + " cells completed, " + std::to_string(count_matches) +
                " trainable counts equal r(d+k) per wrapped map plus heads"};
}

} // namespace

int main(int argc, char **argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
    const auto want = [&](int c) { return wanted.empty() || wanted.count(c); };

    const char *names[] = {"",
                           "gradient suite",
                           "LoRA zero-init equivalence",
                           "merge equivalence",
                           "frozen base hash",
                           "contact maps and CM-MAH identity",
                           "metric and loss oracles",
                           "padding invariance",
                           "learning signal",
                           "determinism",
                           "rank x target sweep"};
    int failures = 0;
    std::vector<RunReport> first_learning;
    for (int c = 1; c <= 10; ++c) {
        if (!want(c)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            switch (c) {
            case 1: out = criterion1(); break;
            case 2: out = criterion2(); break;
            case 3: out = criterion3(); break;
            case 4: out = criterion4(); break;
            case 5: out = criterion5(); break;
            case 6: out = criterion6(); break;
            case 7: out = criterion7(); break;
            case 8: {
                LearningRun run = learning_signal();
                first_learning = run.reports;
                out = run.outcome;
                break;
            }
            case 9: {
                if (first_learning.empty()) first_learning = learning_signal().reports;
                const LearningRun again = learning_signal();
                std::size_t fields = 0, same = 0;
                for (std::size_t i = 0; i < again.reports.size(); ++i) {
                    const auto fa = first_learning.at(i).numeric_fields(), fb = again.reports[i].numeric_fields();
                    fields += fa.size();
                    same += fa == fb ? fa.size() : 0;
                }
                out = {same == fields && fields > 0, std::to_string(again.reports.size()) + " reports, " + std::to_string(fields) +
                                                         " numeric fields, " + (same == fields ? "all identical" : "MISMATCH")};
                break;
            }
            case 10: out = criterion10(); break;
            }
        } catch (const std::exception &e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << c << " " << (out.pass ? "PASS" : "FAIL") << " [" << names[c] << "] " << out.detail << " ("
                  << fmt(secs, 3) << " s)" << std::endl;
        failures += !out.pass;
    }
    return failures == 0 ? 0 : 1;
}
