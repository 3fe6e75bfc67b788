#include "t4s/experiments.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace t4s;

namespace {

DenseTensor to_dense(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    std::vector<Index> shape(a.shape(), a.shape() + a.ndim());
    return DenseTensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> from_dense(const DenseTensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(t4s_py, m) {
    m.doc() = "Tucker tensor train Taylor series surrogates";

    py::class_<TuckerTensorTrain>(m, "T3")
        .def_property_readonly("shape", &TuckerTensorTrain::shape)
        .def_property_readonly("tucker_ranks", &TuckerTensorTrain::tucker_ranks)
        .def_property_readonly("tt_ranks", &TuckerTensorTrain::tt_ranks)
        .def("to_dense", [](const TuckerTensorTrain& t) { return from_dense(contract_full(t)); })
        .def("norm", &t3_norm)
        .def("to_json", &t3_to_json)
        .def_static("from_json", &t3_from_json);

    m.def(
        "t3_svd",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> a, double rel_tol) {
            return t3_svd_dense(to_dense(a), Truncation::tolerance(rel_tol)).t3;
        },
        py::arg("array"), py::arg("rel_tol") = 0.0, "T3 decomposition of a dense array");

    py::class_<T4SModel>(m, "Model")
        .def_property_readonly("max_order", &T4SModel::max_order)
        .def_property_readonly("input_dim", &T4SModel::input_dim)
        .def_property_readonly("output_dim", &T4SModel::output_dim)
        .def("__call__", py::overload_cast<const T4SModel&, const Vector&>(&evaluate), py::arg("x"))
        .def("evaluate", py::overload_cast<const T4SModel&, const Vector&, int>(&evaluate), py::arg("x"),
             py::arg("up_to"))
        .def("save", [](const T4SModel& m, const std::string& path) { save_model(m, path); });
    m.def("load_model", &load_model, py::arg("path"));

    m.def(
        "parse_config", [](const std::string& text) { return parse_config(text).canonical(); }, py::arg("text"),
        "validated canonical form of a config text");
    m.def(
        "run",
        [](const std::string& text, const std::string& out_dir) {
            ExperimentConfig cfg = parse_config(text);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            std::ostringstream log;
            int code = run_experiment(cfg, log);
            return py::make_tuple(code, log.str());
        },
        py::arg("config_text"), py::arg("out_dir") = "", "runs an experiment; returns (exit code, log)");
    m.def(
        "verify_tables",
        [](int orders) {
            auto rep = run_deriv_verify(orders);
            std::ostringstream os;
            print_count_table(os, rep);
            return py::make_tuple(rep.ok(), os.str());
        },
        py::arg("orders") = kTableOrders);

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
