#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "netanom/adversarial.hpp"
#include "netanom/baselines.hpp"
#include "netanom/classifiers.hpp"
#include "netanom/dataset.hpp"
#include "netanom/ensemble.hpp"
#include "netanom/metrics.hpp"
#include "netanom/midas.hpp"
#include "netanom/rng.hpp"
#include "netanom/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace py = pybind11;
using namespace netanom;

namespace {

struct PyClassifier {
    std::unique_ptr<clf::Classifier> model;
};

struct PyEnsemble {
    ens::StackedEnsemble model;
};

Dataset features_only(const Matrix& X, const VecI& y) {
    Dataset d;
    d.features = X;
    d.labels = y;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "network anomaly detection core: classifiers, adversarial training sets, a "
              "stacked ensemble, streaming edge scores, and unsupervised baselines";

    m.def(
        "synth_dataset",
        [](int n_normal, int n_malicious, int n_features, double separation,
           std::uint64_t seed) {
            const Dataset ds =
                data::synth_generate(n_normal, n_malicious, n_features, separation, seed);
            return py::make_tuple(Matrix(ds.features), VecI(ds.labels));
        },
        py::arg("n_normal"), py::arg("n_malicious"), py::arg("n_features"),
        py::arg("separation") = 1.5, py::arg("seed") = 1,
        "Two gaussian classes with a class-correlated nominal column; returns (features, "
        "labels).");

    m.def(
        "standardize",
        [](const Matrix& X) {
            const FeatureStats st = data::fit_stats(X);
            Matrix Xs = X;
            data::apply_stats(Xs, st);
            return py::make_tuple(Xs, VecD(st.means), VecD(st.stds));
        },
        py::arg("features"),
        "Column-wise zero mean / unit population std; returns (standardized, means, stds).");

    m.def(
        "lda_fgsm",
        [](const Matrix& X, const VecI& y, double epsilon, double fraction, std::uint64_t seed) {
            adv::FgsmResult r = adv::lda_fgsm(X, y, epsilon, fraction, seed);
            std::vector<std::int64_t> rows(r.rows.begin(), r.rows.end());
            return py::make_tuple(Matrix(std::move(r.features)), rows);
        },
        py::arg("features"), py::arg("labels"), py::arg("epsilon"), py::arg("fraction") = 0.2,
        py::arg("seed") = 1,
        "Evasion perturbation against an LDA fit on the input; returns (features, rows "
        "touched).");

    m.def("feature_mean_shift", &adv::feature_mean_shift, py::arg("features"), py::arg("labels"),
          py::arg("selected"),
          "Remaps the selected malicious columns so their mean equals the normal mean.");

    py::class_<PyClassifier>(m, "Classifier")
        .def(py::init([](const std::string& kind, std::uint64_t seed) {
                 clf::HyperParams p;
                 p.seed = seed;
                 return PyClassifier{clf::Classifier::make(clf::parse_kind(kind), p)};
             }),
             py::arg("kind"), py::arg("seed") = 1,
             "kinds: lda, qda, gaussian-nb, logistic-regression, decision-tree, bagging, "
             "random-forest")
        .def("fit",
             [](PyClassifier& c, const Matrix& X, const VecI& y) {
                 c.model->fit(X, y);
             })
        .def("predict",
             [](const PyClassifier& c, const Matrix& X) { return c.model->predict(X); })
        .def("predict_proba",
             [](const PyClassifier& c, const Matrix& X) { return c.model->predict_proba(X); })
        .def("to_json", [](const PyClassifier& c) { return c.model->to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return PyClassifier{clf::Classifier::from_json(nlohmann::json::parse(text))};
        });

    py::class_<PyEnsemble>(m, "StackedEnsemble")
        .def_static(
            "train",
            [](const Matrix& t1, const Matrix& t2, const Matrix& t3, const VecI& y,
               const std::string& level2, std::uint64_t seed, int threads) {
                adv::TrainingSetTriple triple;
                triple.t1 = features_only(t1, y);
                triple.t2 = features_only(t2, y);
                triple.t3 = features_only(t3, y);
                const std::vector<ens::MemberSpec> specs = ens::default_member_specs(seed);
                PyEnsemble e;
                e.model.level1 = ens::train_level1(triple, specs, threads);
                const Matrix meta = ens::level1_meta_features(e.model.level1, t1);
                clf::HyperParams p;
                p.seed = derive_seed(seed, 0x6c32);
                e.model.level2 = ens::train_level2(meta, y, clf::parse_kind(level2), p);
                for (std::size_t i = 0; i < specs.size(); ++i)
                    e.model.meta_feature_names.push_back(
                        "t" + std::to_string(i + 1) + "_" + clf::kind_name(specs[i].kind));
                return e;
            },
            py::arg("t1"), py::arg("t2"), py::arg("t3"), py::arg("labels"),
            py::arg("level2") = "gaussian-nb", py::arg("seed") = 1, py::arg("threads") = 1,
            "LR/DT/LDA level 1 trained on T1/T2/T3, level 2 on T1 meta features.")
        .def("predict",
             [](const PyEnsemble& e, const Matrix& X) {
                 return ens::predict_pipeline(e.model, X).labels;
             })
        .def("malicious_probability",
             [](const PyEnsemble& e, const Matrix& X) {
                 return ens::predict_pipeline(e.model, X).malicious;
             })
        .def("to_json", [](const PyEnsemble& e) { return e.model.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            PyEnsemble e;
            e.model = ens::StackedEnsemble::from_json(nlohmann::json::parse(text));
            return e;
        });

    m.def(
        "midas_scores",
        [](const std::vector<std::string>& u, const std::vector<std::string>& v,
           const std::vector<std::int64_t>& t, int depth, int width, std::uint64_t seed) {
            if (u.size() != v.size() || u.size() != t.size())
                throw std::invalid_argument("midas_scores: u, v, t lengths differ");
            std::vector<midas::EdgeEvent> events(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) events[i] = {u[i], v[i], t[i]};
            midas::MidasParams params;
            params.depth = depth;
            params.width = width;
            params.seed = seed;
            const std::vector<midas::ScoredEvent> scored = midas::process_stream(events, params);
            VecD out(static_cast<Eigen::Index>(scored.size()));
            for (Eigen::Index i = 0; i < out.size(); ++i)
                out[i] = scored[static_cast<std::size_t>(i)].score;
            return out;
        },
        py::arg("u"), py::arg("v"), py::arg("t"), py::arg("depth") = 2, py::arg("width") = 1024,
        py::arg("seed") = 1,
        "Per-event chi-squared burst scores over an edge stream sorted by tick.");

    m.def(
        "synth_edge_stream",
        [](std::int64_t ticks, double rate, int nodes, int bursts, std::int64_t burst_size,
           std::uint64_t seed) {
            midas::EdgeStreamConfig cfg;
            cfg.ticks = ticks;
            cfg.background_rate = rate;
            cfg.n_nodes = nodes;
            cfg.n_bursts = bursts;
            cfg.burst_size = burst_size;
            cfg.seed = seed;
            const midas::SynthStream s = midas::synth_edge_stream(cfg);
            std::vector<std::string> u, v;
            std::vector<std::int64_t> t;
            u.reserve(s.events.size());
            v.reserve(s.events.size());
            t.reserve(s.events.size());
            for (const auto& e : s.events) {
                u.push_back(e.u);
                v.push_back(e.v);
                t.push_back(e.t);
            }
            return py::make_tuple(u, v, t, VecI(s.labels));
        },
        py::arg("ticks") = 200, py::arg("rate") = 50.0, py::arg("nodes") = 30,
        py::arg("bursts") = 5, py::arg("burst_size") = 300, py::arg("seed") = 1,
        "Poisson background plus injected single-pair bursts; returns (u, v, t, labels).");

    m.def("auc", &metrics::auc, py::arg("labels"), py::arg("scores"),
          "Mann-Whitney AUC with half credit for ties.");

    m.def(
        "f1_per_class",
        [](const VecI& labels, const VecI& predictions) {
            const metrics::PerClassMetrics pm = metrics::f1_per_class(labels, predictions);
            py::dict out;
            auto cls = [](const metrics::ClassMetrics& c) {
                py::dict d;
                d["precision"] = c.precision;
                d["recall"] = c.recall;
                d["f1"] = c.f1;
                return d;
            };
            out["normal"] = cls(pm.normal);
            out["malicious"] = cls(pm.malicious);
            out["accuracy"] = pm.accuracy;
            return out;
        },
        py::arg("labels"), py::arg("predictions"));

    m.def("isolation_forest_score", &base::isolation_forest_score, py::arg("features"),
          py::arg("n_trees") = 100, py::arg("subsample") = 256, py::arg("seed") = 1,
          py::arg("threads") = 1, "Anomaly score in (0, 1); higher is more anomalous.");

    m.def("lof_score", &base::lof_score, py::arg("features"), py::arg("k") = 20,
          py::arg("threads") = 1, "Local outlier factor; ~1 inliers, larger is more anomalous.");
}
