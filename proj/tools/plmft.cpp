// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// plmft: pretrain, finetune, evaluate, sweep, predict, plot, synth.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 data error, 4 numeric error, 5 checkpoint load error.

#include "plm/errors.hpp"
#include "plm/plot.hpp"
#include "plm/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace plm;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4, kLoad = 5 };

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed;
    std::string report_path;
};

RunConfig load_run_config(const Common &c) {
    ConfigMap m = c.config_path.empty() ? ConfigMap{} : ConfigMap::load(c.config_path);
    for (const auto &s : c.sets) m.set_assignment(s);
    if (!c.seed.empty()) m.set("seed", c.seed);
    return RunConfig::from_map(m);
}

void emit_report(const Common &c, const RunReport &r) {
    const std::string text = r.to_text();
    std::cout << text;
    if (!c.report_path.empty()) {
        std::ofstream out(c.report_path, std::ios::app);
        if (!out) throw DataError("cannot append to report file " + c.report_path);
        out << text;
    }
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string format_prediction(const Prediction &p, const TaskSpec &task) {
    std::ostringstream o;
    o.precision(10);
    switch (task.kind) {
    case TaskKind::kSeqMultilabel: {
        const auto &probs = std::get<std::vector<double>>(p.value);
        for (std::size_t i = 0; i < probs.size(); ++i) o << (i ? ";" : "") << probs[i];
        break;
    }
    case TaskKind::kSeqMulticlass:
        o << std::get<std::size_t>(p.value) << '\t';
        for (std::size_t i = 0; i < p.scores.size(); ++i) o << (i ? ";" : "") << p.scores[i];
        break;
    case TaskKind::kTokenMulticlass:
        for (auto c : std::get<std::vector<std::size_t>>(p.value)) o << c;
        break;
    case TaskKind::kSeqRegression:
        o << std::get<double>(p.value);
        break;
    }
    return o.str();
}

std::vector<TargetSet> parse_target_list(const std::vector<std::string> &items) {
    std::vector<TargetSet> out;
    for (const auto &s : items) out.push_back(parse_targets(s));
    return out;
}

int exit_code_for(const Error &e) {
    switch (e.category()) {
    case ErrorCategory::kConfig: return kConfig;
    case ErrorCategory::kData: return kData;
    case ErrorCategory::kNumeric: return kNumeric;
    case ErrorCategory::kLoad: return kLoad;
    default: return kOther;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"plmft: LoRA fine-tuning of a small protein language model"};
    app.require_subcommand(1);
    Common common;
    const auto add_common = [&common](CLI::App *sub) {
        sub->add_option("-c,--config", common.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--set", common.sets, "override one config entry, key=value (repeatable)");
        sub->add_option("--seed", common.seed, "run seed (default: config 'seed', then $PLMFT_SEED, then 0)");
        sub->add_option("--report", common.report_path, "append the run report to this file");
    };

    // synth
    auto *synth = app.add_subcommand("synth", "write a synthetic task table pair or pretraining corpus");
    std::string synth_kind = "seq-regression", synth_train, synth_test, synth_corpus_out;
    std::size_t synth_n = 200, synth_len = 40, synth_classes = 4;
    std::uint64_t synth_seed = 0;
    synth->add_option("--kind", synth_kind, "seq-multilabel | seq-multiclass | token-multiclass | seq-regression | corpus")
        ->capture_default_str();
    synth->add_option("--n", synth_n, "record count (train + test)")->capture_default_str();
    synth->add_option("--max-len", synth_len, "maximum residues per sequence")->capture_default_str();
    synth->add_option("--classes", synth_classes, "class count for classification tasks")->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--train-out", synth_train, "train table path");
    synth->add_option("--test-out", synth_test, "test table path");
    synth->add_option("--out", synth_corpus_out, "FASTA path for --kind corpus");

    // pretrain
    auto *pretrain = app.add_subcommand("pretrain", "masked-token pretraining of a fresh encoder");
    add_common(pretrain);
    std::string corpus_path, pretrain_out;
    pretrain->add_option("--corpus", corpus_path, "FASTA corpus (default: synthetic corpus from pretrain.* keys)");
    pretrain->add_option("-o,--out", pretrain_out, "base checkpoint to write")->required();

    // finetune
    auto *ft = app.add_subcommand("finetune", "train adapters, contact head and downstream head");
    add_common(ft);
    std::string base_path, train_path, test_path, ft_out;
    ft->add_option("--base", base_path, "base checkpoint")->required()->check(CLI::ExistingFile);
    ft->add_option("--train", train_path, "train task table")->required()->check(CLI::ExistingFile);
    ft->add_option("--test", test_path, "test task table")->required()->check(CLI::ExistingFile);
    ft->add_option("-o,--out", ft_out, "finetune checkpoint to write");

    // evaluate
    auto *ev = app.add_subcommand("evaluate", "score a finetuned model on a task table");
    add_common(ev);
    std::string ckpt_path;
    ev->add_option("--base", base_path, "base checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--checkpoint", ckpt_path, "finetune checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--test", test_path, "task table")->required()->check(CLI::ExistingFile);

    // sweep
    auto *sw = app.add_subcommand("sweep", "one finetune run per (rank, target set) cell");
    add_common(sw);
    std::string ranks_text = "1,2,4,8,16,32", table_path, grid_path;
    std::vector<std::string> target_items;
    bool lr_search_flag = false;
    sw->add_option("--base", base_path, "base checkpoint")->required()->check(CLI::ExistingFile);
    sw->add_option("--train", train_path, "train task table")->required()->check(CLI::ExistingFile);
    sw->add_option("--test", test_path, "test task table")->required()->check(CLI::ExistingFile);
    sw->add_option("--ranks", ranks_text, "comma-separated ranks")->capture_default_str();
    sw->add_option("--targets", target_items, "target set such as q,k or qkv+dense (repeatable; default: 14 ablation sets)");
    sw->add_flag("--lr-search", lr_search_flag, "3-epoch probe per learning rate, then a full run at the best");
    sw->add_option("--table", table_path, "write the long-form TSV table here");
    sw->add_option("--grid", grid_path, "write the targets x ranks grid here");

    // predict
    auto *pr = app.add_subcommand("predict", "per-record predictions for a FASTA file");
    add_common(pr);
    std::string fasta_path, pred_out, contacts_out;
    pr->add_option("--base", base_path, "base checkpoint")->required()->check(CLI::ExistingFile);
    pr->add_option("--checkpoint", ckpt_path, "finetune checkpoint")->required()->check(CLI::ExistingFile);
    pr->add_option("--fasta", fasta_path, "input sequences")->required()->check(CLI::ExistingFile);
    pr->add_option("-o,--out", pred_out, "prediction table (TSV)")->required();
    pr->add_option("--emit-contacts", contacts_out, "also write residue contact maps here");

    // plot
    auto *pl = app.add_subcommand("plot", "render report curves as SVG");
    std::string plot_report, plot_prefix;
    pl->add_option("--report", plot_report, "report file")->required()->check(CLI::ExistingFile);
    pl->add_option("-o,--out", plot_prefix, "output prefix; writes <prefix>_loss.svg and <prefix>_metric.svg")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*synth) {
            if (synth_kind == "corpus") {
                if (synth_corpus_out.empty()) throw ConfigError("--out is required for --kind corpus");
                write_fasta(synth_corpus_out, synth_corpus(synth_n, synth_len, synth_seed));
            } else {
                if (synth_train.empty() || synth_test.empty()) throw ConfigError("--train-out and --test-out are required");
                const TaskKind kind = parse_task_kind(synth_kind);
                SynthOptions opts;
                opts.num_classes = synth_classes;
                const std::size_t classes = kind == TaskKind::kSeqRegression ? 1 : kind == TaskKind::kTokenMulticlass ? 3 : synth_classes;
                const TaskSpec spec = make_task("synthetic", kind, classes);
                auto [train, test] = synth_task(kind, synth_n, synth_len, synth_seed, opts);
                write_task_table(synth_train, train, spec);
                write_task_table(synth_test, test, spec);
            }
        } else if (*pretrain) {
            const RunConfig cfg = load_run_config(common);
            const std::size_t synth_len = std::min(cfg.pretrain.corpus_max_len, cfg.encoder.max_len - 2);
            const auto corpus = corpus_path.empty() ? synth_corpus(cfg.pretrain.corpus_size, synth_len, cfg.seed) : load_fasta(corpus_path);
            auto result = pretrain_mlm(cfg, corpus);
            save_checkpoint(pretrain_out, base_checkpoint(result.encoder));
            emit_report(common, result.report);
        } else if (*ft) {
            const RunConfig cfg = load_run_config(common);
            const Encoder base = encoder_from_checkpoint(load_checkpoint(base_path));
            const auto train = load_task_table(train_path, cfg.task);
            const auto test = load_task_table(test_path, cfg.task);
            auto result = finetune(cfg, base, train, test);
            if (!ft_out.empty()) save_checkpoint(ft_out, finetune_checkpoint(result.model, cfg, hash_params(base.base_parameters())));
            emit_report(common, result.report);
        } else if (*ev) {
            const Model model = model_from_checkpoints(load_checkpoint(base_path), load_checkpoint(ckpt_path));
            const auto test = load_task_table(test_path, model.task);
            RunReport r = evaluate(model, test);
            emit_report(common, r);
        } else if (*sw) {
            const RunConfig cfg = load_run_config(common);
            const Encoder base = encoder_from_checkpoint(load_checkpoint(base_path));
            const auto train = load_task_table(train_path, cfg.task);
            const auto test = load_task_table(test_path, cfg.task);
            SweepOptions opts;
            opts.ranks = parse_size_list(ranks_text);
            if (!target_items.empty()) opts.targets = parse_target_list(target_items);
            opts.lr_search = lr_search_flag;
            const auto cells = sweep(cfg, base, train, test, opts);
            for (const auto &c : cells) emit_report(common, c.report);
            const std::string tsv = sweep_table_tsv(cells), grid = sweep_table_grid(cells);
            std::cout << grid;
            if (!table_path.empty()) std::ofstream(table_path) << tsv;
            if (!grid_path.empty()) std::ofstream(grid_path) << grid;
        } else if (*pr) {
            const Model model = model_from_checkpoints(load_checkpoint(base_path), load_checkpoint(ckpt_path));
            const auto entries = load_fasta(fasta_path);
            std::vector<Record> records;
            std::size_t unknown = 0;
            for (const auto &e : entries) {
                if (e.sequence.size() + 2 > model.encoder.config().max_len)
                    throw DataError("length error: sequence " + e.id + " exceeds max_len");
                unknown += encode(e.sequence).unknown;
                records.push_back({e.id, e.sequence, {}});
            }
            const auto preds = predict_records(model, records);
            std::ofstream out(pred_out);
            if (!out) throw DataError("cannot write " + pred_out);
            out << "id\tprediction" << (model.task.kind == TaskKind::kSeqMulticlass ? "\tprobabilities" : "") << '\n';
            for (const auto &p : preds) out << p.id << '\t' << format_prediction(p, model.task) << '\n';
            if (!contacts_out.empty()) {
                std::vector<std::string> ids;
                for (const auto &r : records) ids.push_back(r.id);
                write_contact_maps(contacts_out, ids, predict_contacts(model, records));
            }
            if (unknown > 0) std::fprintf(stderr, "warning: %zu residues outside the alphabet were mapped to UNK\n", unknown);
            RunReport r;
            r.command = "predict";
            r.metric = metric_name(model.task.metric);
            r.unknown_residues = unknown;
            r.extras["records"] = static_cast<double>(records.size());
            emit_report(common, r);
        } else if (*pl) {
            const auto reports = RunReport::parse_all(read_file(plot_report));
            if (reports.empty()) throw DataError("no runs in " + plot_report);
            std::vector<Series> loss, metric;
            for (std::size_t i = 0; i < reports.size(); ++i) {
                const std::string label = reports[i].command + " #" + std::to_string(i + 1);
                if (!reports[i].train_loss.empty()) loss.push_back({label, reports[i].train_loss});
                if (!reports[i].test_metric.empty()) metric.push_back({label + " test", reports[i].test_metric});
                if (!reports[i].train_metric.empty()) metric.push_back({label + " train", reports[i].train_metric});
            }
            std::ofstream(plot_prefix + "_loss.svg") << line_chart_svg("training loss", "epoch (step for pretraining)", loss);
            std::string metric_title = "metric";
            for (const auto &r : reports)
                if (!r.test_metric.empty()) {
                    metric_title = r.metric;
                    break;
                }
            std::ofstream(plot_prefix + "_metric.svg") << line_chart_svg(metric_title, "epoch", metric);
        }
    } catch (const Error &e) {
        std::cerr << "plmft: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception &e) {
        std::cerr << "plmft: " << e.what() << '\n';
        return kOther;
    }
    return kOk;
}
