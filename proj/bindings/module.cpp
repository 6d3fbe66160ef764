#include "memtrade/config.hpp"
#include "memtrade/embedding.hpp"
#include "memtrade/errors.hpp"
#include "memtrade/market_data.hpp"
#include "memtrade/memory.hpp"
#include "memtrade/metrics.hpp"
#include "memtrade/report_io.hpp"
#include "memtrade/simulation.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace memtrade;

namespace {

py::object json_to_py(const nlohmann::json& value) {
    switch (value.type()) {
        case nlohmann::json::value_t::null: return py::none();
        case nlohmann::json::value_t::boolean: return py::bool_(value.get<bool>());
        case nlohmann::json::value_t::number_integer:
            return py::int_(value.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned:
            return py::int_(value.get<std::uint64_t>());
        case nlohmann::json::value_t::number_float: return py::float_(value.get<double>());
        case nlohmann::json::value_t::string: return py::str(value.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list list;
            for (const auto& item : value) list.append(json_to_py(item));
            return list;
        }
        case nlohmann::json::value_t::object: {
            py::dict dict;
            for (const auto& [key, item] : value.items()) {
                dict[py::str(key)] = json_to_py(item);
            }
            return dict;
        }
        default: return py::none();
    }
}

py::dict metrics_to_dict(const Metrics& m) {
    py::dict d;
    d["cr_percent"] = m.cr_percent;
    d["sr"] = m.sr;
    d["av_percent"] = m.av_percent;
    d["mdd_percent"] = m.mdd_percent;
    return d;
}

py::dict event_to_dict(const MemoryEvent& event) {
    py::dict d;
    d["id"] = event.id;
    d["layer"] = to_string(event.layer);
    d["text"] = event.text;
    d["date"] = event.event_date.to_string();
    d["value"] = event.importance_value;
    d["access_count"] = event.access_count;
    d["source"] = to_string(event.source);
    return d;
}

// Owns the embedding provider so Python callers cannot outlive it.
class PyMemoryStore {
public:
    PyMemoryStore(std::uint64_t embed_seed, std::size_t dimension, std::uint64_t rng_seed)
        : embedder_(embed_seed, dimension), store_(MemoryParams{}, embedder_), rng_(rng_seed) {}

    py::dict insert(const std::string& text, const std::string& source, const std::string& date) {
        const MemoryEvent event =
            store_.insert(text, memory_source_from_string(source), Date::parse(date), rng_);
        return event_to_dict(event);
    }

    py::list retrieve_top_k(const std::string& query_text, const std::string& now, std::size_t k) {
        const Embedding query = embedder_.embed(query_text);
        const auto layers = store_.retrieve_top_k(query, Date::parse(now), k);
        py::list result;
        for (const auto& layer : layers) {
            py::list entries;
            for (const ScoredEvent& scored : layer) {
                py::dict entry = event_to_dict(*scored.event);
                entry["gamma"] = scored.score.gamma;
                entry["recency"] = scored.score.recency;
                entry["relevancy"] = scored.score.relevancy;
                entry["importance_scaled"] = scored.score.importance_scaled;
                entries.append(entry);
            }
            result.append(entries);
        }
        return result;
    }

    py::dict register_access(const std::vector<std::int64_t>& ids, const std::string& now) {
        const AccessReport report = store_.register_access(ids, Date::parse(now));
        py::dict d;
        d["boosted"] = report.boosted;
        py::list promotions;
        for (const PromotionRecord& promotion : report.promotions) {
            py::dict p;
            p["id"] = promotion.id;
            p["from"] = to_string(promotion.from);
            p["to"] = to_string(promotion.to);
            promotions.append(p);
        }
        d["promotions"] = promotions;
        return d;
    }

    std::vector<std::int64_t> purge(const std::string& now) {
        return store_.purge(Date::parse(now));
    }

    py::list events() const {
        py::list result;
        for (const MemoryEvent& event : store_.events()) result.append(event_to_dict(event));
        return result;
    }

    std::size_t size() const { return store_.size(); }

private:
    LocalHashEmbedding embedder_;
    MemoryStore store_;
    std::mt19937_64 rng_;
};

py::dict run_experiment_file(const std::string& config_path, const std::string& out_dir,
                             int jobs) {
    const ExperimentConfig config = ExperimentConfig::load(config_path);
    const Environment env = config.load_environment();
    const auto embedder = config.make_embedder();

    ExperimentSetup setup;
    setup.profile = config.make_profile();
    setup.agent = config.make_agent_config();
    setup.memory = config.memory;
    setup.metrics = config.metrics;
    setup.templates = config.load_templates();
    setup.embedder = embedder.get();
    setup.backbone_factory = config.make_backbone_factory();
    setup.transcript_dir = out_dir;
    setup.jobs = jobs;

    const ExperimentResult result = run_experiment(env, config.sim, setup);

    py::dict out;
    out["selected"] = result.selected;
    out["selection_note"] = result.selection_note;
    out["report"] = json_to_py(
        report_to_json(result.epochs[result.selected], config.echo(), result.selection_note));
    py::list epoch_metrics;
    for (const RunReport& epoch : result.epochs) epoch_metrics.append(metrics_to_dict(epoch.metrics));
    out["epochs"] = epoch_metrics;
    return out;
}

py::dict buy_and_hold_file(const std::string& config_path) {
    const ExperimentConfig config = ExperimentConfig::load(config_path);
    return metrics_to_dict(buy_and_hold(config.load_environment(), config.metrics));
}

void translate_errors(std::exception_ptr p) {
    try {
        if (p) std::rethrow_exception(p);
    } catch (const ConfigError& ex) {
        PyErr_SetString(PyExc_ValueError, ex.what());
    } catch (const ValidationError& ex) {
        PyErr_SetString(PyExc_ValueError, ex.what());
    } catch (const ParseError& ex) {
        PyErr_SetString(PyExc_ValueError, ex.what());
    } catch (const ArgumentError& ex) {
        PyErr_SetString(PyExc_ValueError, ex.what());
    } catch (const UndefinedMetricError& ex) {
        PyErr_SetString(PyExc_ArithmeticError, ex.what());
    } catch (const LookupError& ex) {
        PyErr_SetString(PyExc_KeyError, ex.what());
    } catch (const Error& ex) {
        PyErr_SetString(PyExc_RuntimeError, ex.what());
    }
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Layered-memory trading agent core: embeddings, memory store, metrics, episodes";

    py::register_exception_translator(&translate_errors);

    m.def("cosine", &cosine, py::arg("a"), py::arg("b"),
          "Cosine similarity of two equal-length vectors, clamped to [-1, 1].");

    py::class_<LocalHashEmbedding>(m, "LocalEmbedding")
        .def(py::init<std::uint64_t, std::size_t>(), py::arg("seed") = 0,
             py::arg("dimension") = 64)
        .def("embed", &LocalHashEmbedding::embed, py::arg("text"))
        .def_property_readonly("dimension", &LocalHashEmbedding::dimension);

    py::class_<PyMemoryStore>(m, "MemoryStore")
        .def(py::init<std::uint64_t, std::size_t, std::uint64_t>(), py::arg("embed_seed") = 0,
             py::arg("dimension") = 64, py::arg("rng_seed") = 42)
        .def("insert", &PyMemoryStore::insert, py::arg("text"), py::arg("source"),
             py::arg("date"),
             "Insert one item; source is news / filing_10q / filing_10k / reflection.")
        .def("retrieve_top_k", &PyMemoryStore::retrieve_top_k, py::arg("query_text"),
             py::arg("now"), py::arg("k") = 5,
             "Per-layer top-k scored events (shallow, intermediate, deep).")
        .def("register_access", &PyMemoryStore::register_access, py::arg("ids"), py::arg("now"))
        .def("purge", &PyMemoryStore::purge, py::arg("now"))
        .def("events", &PyMemoryStore::events)
        .def("__len__", &PyMemoryStore::size);

    m.def("cumulative_return", &cumulative_return, py::arg("strategy_returns"));
    m.def(
        "sharpe",
        [](const std::vector<double>& returns, double risk_free_daily, bool annualize) {
            MetricsOptions options;
            options.annualize_sharpe = annualize;
            return sharpe(returns, risk_free_daily, options);
        },
        py::arg("strategy_returns"), py::arg("risk_free_daily") = 0.0,
        py::arg("annualize") = true);
    m.def(
        "annualized_volatility",
        [](const std::vector<double>& returns) { return annualized_volatility(returns); },
        py::arg("strategy_returns"));
    m.def("max_drawdown", &max_drawdown, py::arg("portfolio_values"));
    m.def(
        "metrics_from_returns",
        [](const std::vector<double>& returns) {
            return metrics_to_dict(metrics_from_returns(returns));
        },
        py::arg("strategy_returns"),
        "All four metrics from one daily return series; undefined entries are NaN.");

    m.def("run_experiment", &run_experiment_file, py::arg("config_path"),
          py::arg("out_dir") = std::string{}, py::arg("jobs") = 1,
          "Run the warm-up/test experiment described by a config file; returns the "
          "selected report plus per-epoch metrics.");
    m.def("buy_and_hold", &buy_and_hold_file, py::arg("config_path"),
          "Metrics of the always-long baseline over the config's test range.");
}
