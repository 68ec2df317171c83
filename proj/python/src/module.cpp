#include "kce/adversaries.hpp"
#include "kce/association.hpp"
#include "kce/config.hpp"
#include "kce/container.hpp"
#include "kce/data.hpp"
#include "kce/exact_game.hpp"
#include "kce/fantope_game.hpp"
#include "kce/kernels.hpp"
#include "kce/nystrom.hpp"
#include "kce/pipeline.hpp"
#include "kce/preimage.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace kce;

PYBIND11_MODULE(_kce, m) {
    m.doc() = "Kernelized concept erasure core";

    static py::exception<InvalidArgument> invalid_argument(m, "InvalidArgument", PyExc_ValueError);
    static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
    static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidArgument& e) {
            PyErr_SetString(invalid_argument.ptr(), e.what());
        } catch (const NumericalError& e) {
            PyErr_SetString(numerical_error.ptr(), e.what());
        } catch (const IoError& e) {
            PyErr_SetString(io_error.ptr(), e.what());
        }
    });

    // kernels
    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](const std::string& text) { return parse_kernel(text); }), py::arg("text"))
        .def_static("linear", &KernelSpec::linear)
        .def_static("rbf", &KernelSpec::rbf, py::arg("gamma"))
        .def_readonly("gamma", &KernelSpec::gamma)
        .def_readonly("alpha", &KernelSpec::alpha_offset)
        .def_readonly("degree", &KernelSpec::degree)
        .def_property_readonly("family", [](const KernelSpec& k) { return std::string(family_name(k.family)); })
        .def_property_readonly("slug", [](const KernelSpec& k) { return kernel_slug(k); })
        .def("__call__", [](const KernelSpec& k, const VectorXd& x, const VectorXd& y) { return eval_kernel(k, x, y); })
        .def("__eq__", [](const KernelSpec& a, const KernelSpec& b) { return a == b; })
        .def("__str__", [](const KernelSpec& k) { return to_string(k); })
        .def("__repr__", [](const KernelSpec& k) { return "KernelSpec('" + to_string(k) + "')"; });
    m.def("expand_kernel_grid", [](const std::string& text) { return expand_kernel_grid(text); });
    m.def("gram", [](const KernelSpec& k, const MatrixXd& X) { return gram(k, X); });
    m.def("cross_gram", [](const KernelSpec& k, const MatrixXd& A, const MatrixXd& B) { return cross_gram(k, A, B); });

    // feature map
    py::class_<NystromMap>(m, "NystromMap")
        .def_readonly("landmarks", &NystromMap::landmarks)
        .def_readonly("kernel", &NystromMap::kernel)
        .def_readonly("eigvecs", &NystromMap::eigvecs)
        .def_readonly("eigvals", &NystromMap::eigvals)
        .def_property_readonly("rank", &NystromMap::rank)
        .def("transform", [](const NystromMap& map, const MatrixXd& X) { return transform_rows(map, X); });
    m.def(
        "fit_nystrom",
        [](const MatrixXd& X, const KernelSpec& k, Index L, std::uint64_t seed) { return fit_nystrom(X, k, L, seed); },
        py::arg("X"), py::arg("kernel"), py::arg("L"), py::arg("seed") = 0);

    // game
    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("lr_theta", &SolverConfig::lr_theta)
        .def_readwrite("lr_b", &SolverConfig::lr_b)
        .def_readwrite("batch_size", &SolverConfig::batch_size)
        .def_readwrite("total_batches", &SolverConfig::total_batches)
        .def_readwrite("eval_every", &SolverConfig::eval_every)
        .def_readwrite("seed", &SolverConfig::seed)
        .def_readwrite("probe_reg", &SolverConfig::probe_reg);
    py::class_<GameSolution>(m, "GameSolution")
        .def_readonly("theta", &GameSolution::theta)
        .def_property_readonly("B", [](const GameSolution& g) { return g.B.B; })
        .def_readonly("W", &GameSolution::W)
        .def_readonly("P", &GameSolution::P)
        .def_readonly("selected_step", &GameSolution::selected_step)
        .def_property_readonly("history", [](const GameSolution& g) {
            py::list out;
            for (const auto& h : g.history) out.append(py::make_tuple(h.step, h.probe_accuracy, h.train_loss));
            return out;
        });
    m.def("fantope_project", [](const MatrixXd& A, int k) { return fantope_project(A, k).B; }, py::arg("A"),
          py::arg("k"));
    m.def("solve_game", &solve_game, py::arg("features"), py::arg("labels"), py::arg("dev_features"),
          py::arg("dev_labels"), py::arg("k") = 1, py::arg("config") = SolverConfig{});
    m.def(
        "linear_probe",
        [](const MatrixXd& Xtr, const Labels& ytr, const MatrixXd& Xte, const Labels& yte) {
            return linear_probe(Xtr, ytr, Xte, yte);
        },
        py::arg("X_train"), py::arg("y_train"), py::arg("X_test"), py::arg("y_test"));

    // pre-image
    py::class_<PreimageNet>(m, "PreimageNet")
        .def_property_readonly("input_dim", &PreimageNet::input_dim)
        .def("__call__", [](const PreimageNet& net, const MatrixXd& X) { return forward_rows(net, X); })
        .def("parameters", &pack_parameters);
    m.def("init_preimage_net", &init_preimage_net, py::arg("input_dim"), py::arg("seed") = 0, py::arg("hidden1") = 512,
          py::arg("hidden2") = 300, py::arg("dropout") = 0.1);
    m.def(
        "preimage_loss",
        [](const PreimageNet& net, const MatrixXd& X, const MatrixXd& P, const NystromMap& map) {
            return preimage_batch_loss(net, X, P, map, nullptr);
        },
        py::arg("net"), py::arg("X"), py::arg("P"), py::arg("map"));

    // adversaries
    m.def(
        "kernel_adversary_accuracy",
        [](const MatrixXd& Xtr, const Labels& ytr, const MatrixXd& Xte, const Labels& yte, const KernelSpec& k) {
            return accuracy(fit_kernel(Xtr, ytr, k), Xte, yte);
        },
        py::arg("X_train"), py::arg("y_train"), py::arg("X_test"), py::arg("y_test"), py::arg("kernel"));
    m.def(
        "mlp_adversary_accuracy",
        [](const MatrixXd& Xtr, const Labels& ytr, const MatrixXd& Xte, const Labels& yte, std::uint64_t seed) {
            MlpConfig cfg;
            cfg.seed = seed;
            return accuracy(fit_mlp(Xtr, ytr, cfg), Xte, yte);
        },
        py::arg("X_train"), py::arg("y_train"), py::arg("X_test"), py::arg("y_test"), py::arg("seed") = 0);

    // data
    m.def(
        "synth_radial",
        [](Index n, Index d, std::uint64_t seed) {
            const auto data = synth_radial(n, d, seed);
            py::dict out;
            for (Split s : {Split::train, Split::dev, Split::test}) {
                const std::string name(split_name(s));
                out[py::str("X_" + name)] = data.features(s);
                out[py::str("y_" + name)] = data.labels(s);
            }
            return out;
        },
        py::arg("n") = 2000, py::arg("d") = 10, py::arg("seed") = 0);

    // association
    m.def(
        "weat_effect",
        [](const std::vector<std::string>& tokens, const MatrixXd& vectors, const std::vector<std::string>& X,
           const std::vector<std::string>& Y, const std::vector<std::string>& A, const std::vector<std::string>& B,
           int permutations, std::uint64_t seed) {
            WordVectors w;
            w.tokens = tokens;
            w.vectors = vectors;
            w.rebuild_index();
            WeatSpec spec;
            spec.name = "custom";
            spec.X = X;
            spec.Y = Y;
            spec.A = A;
            spec.B = B;
            spec.permutations = permutations;
            const auto r = weat(w, spec, seed);
            return py::make_tuple(r.d, r.p);
        },
        py::arg("tokens"), py::arg("vectors"), py::arg("X"), py::arg("Y"), py::arg("A"), py::arg("B"),
        py::arg("permutations") = 10000, py::arg("seed") = 0);
    m.def("spearman", [](const VectorXd& a, const VectorXd& b) { return spearman(a, b); });

    // oracle
    m.def(
        "poly2_oracle_check",
        [](int instances, Index anchors, std::uint64_t seed) {
            const auto r = run_poly2_oracle_check(instances, anchors, seed);
            return r.max_deviation();
        },
        py::arg("instances") = 100, py::arg("anchors") = 10, py::arg("seed") = 0);

    // artifacts and config
    py::class_<ErasureResult>(m, "ErasureResult")
        .def_readonly("kernel", &ErasureResult::kernel)
        .def_readonly("seed", &ErasureResult::seed)
        .def_readonly("map", &ErasureResult::map)
        .def_readonly("game", &ErasureResult::game)
        .def_readonly("net", &ErasureResult::net)
        .def_readonly("majority", &ErasureResult::majority)
        .def_readonly("probe_before", &ErasureResult::probe_before)
        .def_readonly("probe_after", &ErasureResult::probe_after)
        .def_property_readonly("recon_percent", [](const ErasureResult& r) { return r.recon.percent; });
    m.def("load_erasure", &load_erasure, py::arg("path"));
    m.def(
        "config_hash",
        [](const std::vector<std::string>& overrides) {
            RunConfig cfg;
            for (const auto& o : overrides) apply_override(cfg, o);
            return cfg.hash();
        },
        py::arg("overrides") = std::vector<std::string>{});
    m.def("config_keys", &config_keys);
}
