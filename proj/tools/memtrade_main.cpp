#include "memtrade/config.hpp"
#include "memtrade/errors.hpp"
#include "memtrade/report_io.hpp"
#include "memtrade/simulation.hpp"
#include "memtrade/transcript.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace memtrade;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitProvider = 3;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) {
        throw ConfigError("cannot write " + path);
    }
    out << content;
}

ExperimentSetup make_setup(const ExperimentConfig& config, const EmbeddingProvider& embedder,
                           const std::string& transcript_dir, int jobs) {
    ExperimentSetup setup;
    setup.profile = config.make_profile();
    setup.agent = config.make_agent_config();
    setup.memory = config.memory;
    setup.metrics = config.metrics;
    setup.templates = config.load_templates();
    setup.embedder = &embedder;
    setup.backbone_factory = config.make_backbone_factory();
    setup.transcript_dir = transcript_dir;
    setup.jobs = jobs;
    return setup;
}

int cmd_validate(const std::string& config_path) {
    const ExperimentConfig config = ExperimentConfig::load(config_path);
    BuildStats stats;
    const Environment env = config.load_environment(&stats);

    const auto warmup_days = env.trading_days(env.warmup_range);
    const auto test_days = env.trading_days(env.test_range);
    if (warmup_days.size() < 2) {
        throw ValidationError("warm-up range has " + std::to_string(warmup_days.size()) +
                              " trading days, needs at least 2");
    }
    if (test_days.size() < 2) {
        throw ValidationError("test range has " + std::to_string(test_days.size()) +
                              " trading days, needs at least 2");
    }
    if (env.bar_index(test_days.front()) < config.sim.k_momentum) {
        throw ValidationError("test start has fewer than k_momentum=" +
                              std::to_string(config.sim.k_momentum) + " prior trading days");
    }

    std::size_t warmup_news = 0, test_news = 0, warmup_filings = 0, test_filings = 0;
    for (const auto& [date, items] : env.news) {
        (env.warmup_range.contains(date) ? warmup_news : test_news) += items.size();
    }
    for (const auto& [date, items] : env.filings) {
        (env.warmup_range.contains(date) ? warmup_filings : test_filings) += items.size();
    }

    std::cout << "config:   " << config_path << " (clean)\n";
    std::cout << "bars:     " << env.bars.size() << " trading days total\n";
    std::cout << "warm-up:  " << warmup_days.size() << " trading days, " << warmup_news
              << " news, " << warmup_filings << " filings\n";
    std::cout << "test:     " << test_days.size() << " trading days, " << test_news << " news, "
              << test_filings << " filings\n";
    if (stats.news_dropped + stats.filings_dropped > 0) {
        std::cerr << "dropped:  " << stats.news_dropped << " news, " << stats.filings_dropped
                  << " filings outside the data window\n";
    }
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int jobs,
            std::optional<std::uint64_t> seed_override, bool snapshots) {
    ExperimentConfig config = ExperimentConfig::load(config_path);
    if (seed_override) config.sim.seed = *seed_override;

    BuildStats stats;
    const Environment env = config.load_environment(&stats);
    if (stats.news_dropped + stats.filings_dropped > 0) {
        std::cerr << "dropped " << stats.news_dropped << " news and " << stats.filings_dropped
                  << " filings outside the data window\n";
    }

    std::filesystem::create_directories(out_dir);
    const auto embedder = config.make_embedder();
    ExperimentSetup setup = make_setup(config, *embedder, out_dir, jobs);
    if (snapshots) setup.snapshot_dir = out_dir;

    const ExperimentResult result = run_experiment(env, config.sim, setup);
    const RunReport& selected = result.epochs[result.selected];

    nlohmann::json report_json = report_to_json(selected, config.echo(), result.selection_note);
    nlohmann::json checksums = {{"price", file_checksum(config.price_path)}};
    if (!config.news_path.empty()) checksums["news"] = file_checksum(config.news_path);
    if (!config.filings_path.empty()) checksums["filings"] = file_checksum(config.filings_path);
    report_json["data_checksums"] = checksums;

    write_file(out_dir + "/report.json", report_json.dump(2) + "\n");
    write_file(out_dir + "/epochs.csv", epoch_metrics_csv(result));
    write_file(out_dir + "/days.csv", daily_records_csv(selected));

    const Metrics baseline = buy_and_hold(env, config.metrics);
    std::cout << "selected epoch " << result.selected << " of " << result.epochs.size() << " ("
              << result.selection_note << ")\n";
    std::cout << comparison_table(selected.metrics, baseline);
    std::cout << "report written to " << out_dir << "/report.json\n";
    return kExitOk;
}

int cmd_compare(const std::string& report_path, const std::string& config_path,
                const std::string& csv_path) {
    std::ifstream in(report_path);
    if (!in.is_open()) {
        throw ConfigError("cannot open report: " + report_path);
    }
    nlohmann::json report_json;
    try {
        in >> report_json;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError("report " + report_path + ": " + ex.what());
    }
    const RunReport report = report_from_json(report_json);

    const ExperimentConfig config = ExperimentConfig::load(config_path);
    const Environment env = config.load_environment();
    if (report.test_range.start != env.test_range.start ||
        report.test_range.end != env.test_range.end) {
        throw ComparisonError("report test range " + report.test_range.start.to_string() + ".." +
                              report.test_range.end.to_string() +
                              " does not match the config's " +
                              env.test_range.start.to_string() + ".." +
                              env.test_range.end.to_string());
    }

    const Metrics baseline = buy_and_hold(env, config.metrics);
    std::cout << comparison_table(report.metrics, baseline);
    if (!csv_path.empty()) {
        write_file(csv_path, comparison_csv(report.metrics, baseline));
    }
    return kExitOk;
}

int cmd_replay(const std::string& transcript_path) {
    const auto records = read_transcript(transcript_path);

    std::size_t requests = 0;
    std::size_t days = 0;
    std::size_t mismatches = 0;
    std::vector<std::int64_t> presented;
    std::string last_response;

    for (const auto& record : records) {
        const std::string kind = record.value("kind", "");
        if (kind == "manifest") {
            presented.clear();
            for (const auto& layer : record.at("presented_ids")) {
                for (const auto& id : layer) presented.push_back(id.get<std::int64_t>());
            }
        } else if (kind == "request") {
            ++requests;
        } else if (kind == "response") {
            last_response = record.value("content", "");
        } else if (kind == "decision") {
            ++days;
            const std::string recorded = record.value("action", "");
            const bool fallback = record.value("fallback", false);
            std::string reparsed = "Hold";
            if (!fallback) {
                try {
                    reparsed = to_string(parse_decision(last_response, presented).action);
                } catch (const FormatError&) {
                    reparsed = "(unparsable)";
                }
            }
            const bool match = fallback || reparsed == recorded;
            if (!match) ++mismatches;
            std::cout << record.value("date", "?") << "  " << recorded
                      << (fallback ? "  [fallback]" : match ? "" : "  [re-parse: " + reparsed + "]")
                      << '\n';
        }
    }

    std::cout << "replayed " << days << " decisions from " << requests << " requests";
    if (mismatches > 0) {
        std::cout << ", " << mismatches << " re-parse mismatches\n";
        return kExitRuntime;
    }
    std::cout << ", all consistent\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered-memory LLM trading agent: environments, episodes, metrics"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", report_path, csv_path, transcript_path;
    int jobs = 1;
    bool snapshots = false;
    std::optional<std::uint64_t> seed_override;

    auto* validate = app.add_subcommand("validate", "load a config and validate every input file");
    validate->add_option("--config", config_path, "experiment config file")->required();

    auto* run = app.add_subcommand("run", "run the warm-up/test experiment and write reports");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory (report.json, epochs.csv, days.csv, transcripts)");
    run->add_option("--jobs", jobs, "epochs run in parallel (default 1)");
    run->add_option("--seed-override", seed_override, "override sim.seed from the config");
    run->add_flag("--snapshots", snapshots,
                  "also write each epoch's post-warm-up memory store as JSONL");

    auto* compare = app.add_subcommand("compare", "compare a run report against buy-and-hold");
    compare->add_option("report", report_path, "report.json from a run")->required();
    compare->add_option("--config", config_path, "experiment config file")->required();
    compare->add_option("--csv", csv_path, "also write the table as CSV");

    auto* replay = app.add_subcommand("replay", "re-parse a transcript without network access");
    replay->add_option("transcript", transcript_path, "transcript JSONL file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(config_path);
        if (run->parsed()) return cmd_run(config_path, out_dir, jobs, seed_override, snapshots);
        if (compare->parsed()) return cmd_compare(report_path, config_path, csv_path);
        if (replay->parsed()) return cmd_replay(transcript_path);
    } catch (const ParseError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const ProviderError& ex) {
        std::cerr << "provider error: " << ex.what() << '\n';
        if (ex.status() != 0) std::cerr << "status " << ex.status() << ": " << ex.body() << '\n';
        return kExitProvider;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
