#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "volseg/distance_transform.hpp"
#include "volseg/errors.hpp"
#include "volseg/geometry.hpp"
#include "volseg/metrics.hpp"
#include "volseg/nifti.hpp"
#include "volseg/phantom.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/stats.hpp"

#ifndef VOLSEG_VERSION
#define VOLSEG_VERSION "0.0.0"
#endif

namespace py = pybind11;
using namespace volseg;

namespace {

GridGeometry make_geometry(const Index3& dims, const Spacing3& spacing, const Point3& origin) {
    GridGeometry g;
    g.dims = dims;
    g.spacing = spacing;
    g.affine = AffineTransform::diagonal(spacing, origin);
    return g;
}

// Arrays cross the boundary in (x, y, z) index order; the buffer itself is
// x-fastest, so the numpy view is Fortran-contiguous.
template <typename T, typename Grid>
py::array to_numpy(const Grid& g, const std::vector<T>& data) {
    const auto& d = g.geom.dims;
    const auto item = static_cast<py::ssize_t>(sizeof(T));
    return py::array_t<T>(
        {static_cast<py::ssize_t>(d[0]), static_cast<py::ssize_t>(d[1]),
         static_cast<py::ssize_t>(d[2])},
        {item, item * d[0], item * static_cast<py::ssize_t>(d[0]) * d[1]}, data.data());
}

template <typename T, typename Grid>
void fill_from_numpy(Grid& g, std::vector<T>& out, const py::array& arr) {
    if (arr.ndim() != 3) {
        throw InputError("expected a 3-D array");
    }
    const Index3 dims{static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                      static_cast<int>(arr.shape(2))};
    g.geom.dims = dims;
    out.resize(g.geom.voxel_count());
    const auto a = py::array_t<double, py::array::forcecast>::ensure(arr);
    const auto r = a.template unchecked<3>();
    std::size_t idx = 0;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i, ++idx) out[idx] = static_cast<T>(r(i, j, k));
}

PipelineParams params_from_kwargs(const std::string& threshold, int min_component,
                                  int connectivity, double voi_margin_mm,
                                  const std::vector<std::string>& morphology, bool voi_box,
                                  bool body_silhouette) {
    PipelineParams p;
    p.threshold = ThresholdSpec::parse(threshold);
    p.min_component_voxels = min_component;
    p.connectivity = connectivity;
    p.voi_margin_mm = voi_margin_mm;
    for (const auto& m : morphology) p.morphology.push_back(MorphStep::parse(m));
    p.apply_voi_box = voi_box;
    p.apply_body_silhouette = body_silhouette;
    p.validate();
    return p;
}

py::dict metrics_to_dict(const CaseMetrics& m) {
    py::dict d;
    d["case_id"] = m.case_id;
    d["dice"] = m.dice;
    d["hausdorff_mm"] = m.hausdorff_mm;
    d["assd_mm"] = m.assd_mm;
    d["vd_ml"] = m.vd_ml;
    d["rvd_percent"] = m.rvd_percent;
    if (m.correction_time_s) d["correction_time_s"] = *m.correction_time_s;
    return d;
}

py::dict ttest_to_dict(const TTestResult& t) {
    py::dict d;
    d["t"] = t.t_statistic;
    d["df"] = t.degrees_of_freedom;
    d["p"] = t.p_value;
    d["variant"] = t.variant;
    d["significant_at_0_05"] = t.significant_at_0_05;
    return d;
}

} // namespace

PYBIND11_MODULE(_volseg, m) {
    m.doc() = "Fetal fat segmentation toolkit for Dixon MRI volumes";
    m.attr("__version__") = VOLSEG_VERSION;

    py::register_exception<Error>(m, "VolsegError", PyExc_RuntimeError);

    py::class_<Volume>(m, "Volume")
        .def_static(
            "from_array",
            [](const py::array& a, const Spacing3& spacing, const Point3& origin) {
                Volume v;
                fill_from_numpy(v, v.voxels, a);
                v.geom = make_geometry(v.geom.dims, spacing, origin);
                return v;
            },
            py::arg("array"), py::arg("spacing") = Spacing3{1.0, 1.0, 1.0},
            py::arg("origin") = Point3{0.0, 0.0, 0.0})
        .def_property_readonly("shape", [](const Volume& v) { return v.geom.dims; })
        .def_property_readonly("spacing", [](const Volume& v) { return v.geom.spacing; })
        .def("to_array", [](const Volume& v) { return to_numpy(v, v.voxels); })
        .def("__repr__", [](const Volume& v) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "Volume(%dx%dx%d, spacing %.3gx%.3gx%.3g mm)",
                          v.geom.dims[0], v.geom.dims[1], v.geom.dims[2], v.geom.spacing[0],
                          v.geom.spacing[1], v.geom.spacing[2]);
            return std::string(buf);
        });

    py::class_<Mask>(m, "Mask")
        .def_static(
            "from_array",
            [](const py::array& a, const Spacing3& spacing, const Point3& origin) {
                Mask msk;
                fill_from_numpy(msk, msk.voxels, a);
                for (auto& v : msk.voxels) v = v ? 1 : 0;
                msk.geom = make_geometry(msk.geom.dims, spacing, origin);
                return msk;
            },
            py::arg("array"), py::arg("spacing") = Spacing3{1.0, 1.0, 1.0},
            py::arg("origin") = Point3{0.0, 0.0, 0.0})
        .def_property_readonly("shape", [](const Mask& m_) { return m_.geom.dims; })
        .def_property_readonly("spacing", [](const Mask& m_) { return m_.geom.spacing; })
        .def("to_array", [](const Mask& m_) { return to_numpy(m_, m_.voxels); })
        .def("foreground_count", &Mask::foreground_count)
        .def("volume_ml", [](const Mask& m_) { return volume_ml(m_); })
        .def("__repr__", [](const Mask& m_) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "Mask(%dx%dx%d, %zu foreground)", m_.geom.dims[0],
                          m_.geom.dims[1], m_.geom.dims[2], m_.foreground_count());
            return std::string(buf);
        });

    m.def("read_nifti", [](const std::filesystem::path& p) { return read_nifti(p); },
          py::arg("path"));
    m.def("read_nifti_mask", &read_nifti_mask, py::arg("path"));
    m.def(
        "write_nifti",
        [](const Volume& v, const std::filesystem::path& p) { write_nifti(v, p); },
        py::arg("volume"), py::arg("path"));
    m.def(
        "write_nifti_mask",
        [](const Mask& msk, const std::filesystem::path& p) { write_nifti(msk, p); },
        py::arg("mask"), py::arg("path"));

    m.def(
        "run_semi_auto",
        [](const Volume& fat, const Mask& body, const std::string& threshold, int min_component,
           int connectivity, double voi_margin_mm, const std::vector<std::string>& morphology,
           bool voi_box, bool body_silhouette) {
            return run_semi_auto(fat, body,
                                 params_from_kwargs(threshold, min_component, connectivity,
                                                    voi_margin_mm, morphology, voi_box,
                                                    body_silhouette));
        },
        py::arg("fat"), py::arg("body_mask"), py::arg("threshold"),
        py::arg("min_component") = 50, py::arg("connectivity") = 26,
        py::arg("voi_margin_mm") = 5.0, py::arg("morphology") = std::vector<std::string>{},
        py::arg("voi_box") = true, py::arg("body_silhouette") = true);

    m.def("resample_mask_like",
          [](const Mask& src, const Volume& target) {
              return resample_mask_nearest(src, target.geom);
          });
    m.def("distance_transform", [](const Mask& msk) {
        Mask tmp = msk;
        const std::vector<double> d = distance_transform(msk);
        return to_numpy(tmp, d);
    });

    m.def("dice", &dice);
    m.def("hausdorff_mm", &hausdorff_mm);
    m.def("assd_mm", &assd_mm);
    m.def("volume_ml", &volume_ml);
    m.def(
        "evaluate_case",
        [](const Mask& pred, const Mask& gt, const Mask& body, const std::string& case_id) {
            return metrics_to_dict(evaluate_case(case_id, pred, gt, body));
        },
        py::arg("pred"), py::arg("gt"), py::arg("body"), py::arg("case_id") = "case");

    m.def("t_cdf", &t_cdf, py::arg("t"), py::arg("df"));
    m.def("paired_t_test",
          [](const std::vector<double>& x, const std::vector<double>& y) {
              return ttest_to_dict(paired_t_test(x, y));
          });
    m.def("welch_t_test", [](const std::vector<double>& x, const std::vector<double>& y) {
        return ttest_to_dict(welch_t_test(x, y));
    });

    py::class_<PhantomCase>(m, "PhantomCase")
        .def_readonly("trufi", &PhantomCase::trufi)
        .def_readonly("dixon_fat", &PhantomCase::dixon_fat)
        .def_readonly("dixon_water", &PhantomCase::dixon_water)
        .def_readonly("gt_body_trufi", &PhantomCase::gt_body_trufi)
        .def_readonly("gt_body_dixon", &PhantomCase::gt_body_dixon)
        .def_readonly("gt_fat_dixon", &PhantomCase::gt_fat_dixon);

    m.def(
        "generate_phantom",
        [](const std::string& spec_json) {
            return generate(spec_json.empty() ? PhantomSpec{}
                                              : PhantomSpec::from_json(spec_json));
        },
        py::arg("spec_json") = std::string());
    m.def(
        "write_phantom_case",
        [](const PhantomCase& pc, const std::filesystem::path& dir, bool force) {
            write_case(pc, dir, force);
        },
        py::arg("case"), py::arg("directory"), py::arg("force") = false);
}
