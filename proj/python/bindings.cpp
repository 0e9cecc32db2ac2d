#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "exemplar/augment.hpp"
#include "exemplar/dataset.hpp"
#include "exemplar/diagnose.hpp"
#include "exemplar/eval.hpp"
#include "exemplar/inversion.hpp"
#include "exemplar/landmark.hpp"
#include "exemplar/losses.hpp"
#include "exemplar/memory_queue.hpp"

namespace py = pybind11;
using namespace exemplar;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3) throw std::invalid_argument("image array must be HxWxC");
  Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
            static_cast<int>(arr.shape(2)));
  std::copy_n(arr.data(), img.pixels.size(), img.pixels.begin());
  return img;
}

py::array_t<double> image_to_array(const Image& img) {
  py::array_t<double> arr({img.height, img.width, img.channels});
  std::copy_n(img.pixels.begin(), img.pixels.size(), arr.mutable_data());
  return arr;
}

nn::Vec vec_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  nn::Vec v(arr.shape(0));
  std::copy_n(arr.data(), static_cast<std::size_t>(v.size()), v.data());
  return v;
}

py::array_t<double> vec_to_array(const nn::Vec& v) {
  py::array_t<double> arr(v.size());
  std::copy_n(v.data(), static_cast<std::size_t>(v.size()), arr.mutable_data());
  return arr;
}

nn::Mat mat_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  nn::Mat m(arr.shape(0), arr.shape(1));
  for (py::ssize_t i = 0; i < arr.shape(0); ++i)
    for (py::ssize_t j = 0; j < arr.shape(1); ++j) m(i, j) = arr.at(i, j);
  return m;
}

py::array_t<double> mat_to_array(const nn::Mat& m) {
  py::array_t<double> arr({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  auto buf = arr.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) buf(i, j) = m(i, j);
  return arr;
}

}  // namespace

PYBIND11_MODULE(_exemplar, m) {
  m.doc() = "Exemplar-based contrastive pretraining toolkit (native core)";

  // ----- data ---------------------------------------------------------------
  py::enum_<data::PipelineMode>(m, "PipelineMode")
      .value("supervised", data::PipelineMode::Supervised)
      .value("unsupervised", data::PipelineMode::Unsupervised);

  py::class_<data::AugmentationPipeline>(m, "AugmentationPipeline")
      .def(py::init<>())
      .def_readwrite("stage", &data::AugmentationPipeline::stage)
      .def_readwrite("flip_p", &data::AugmentationPipeline::flip_p)
      .def_readwrite("crop_scale_min", &data::AugmentationPipeline::crop_scale_min)
      .def_readwrite("crop_scale_max", &data::AugmentationPipeline::crop_scale_max)
      .def_readwrite("grayscale_p", &data::AugmentationPipeline::grayscale_p)
      .def_readwrite("blur_sigma_min", &data::AugmentationPipeline::blur_sigma_min)
      .def_readwrite("blur_sigma_max", &data::AugmentationPipeline::blur_sigma_max)
      .def_readwrite("output_size", &data::AugmentationPipeline::output_size);

  m.def("pipeline_stage", &data::pipeline_stage, py::arg("level"), py::arg("mode"),
        py::arg("output_size") = 32,
        "Cumulative augmentation pipeline for one table row");

  m.def(
      "make_synthetic_dataset",
      [](int n_classes, int per_class, int size, std::uint64_t seed) {
        const auto set = data::make_synthetic_dataset(n_classes, per_class, size, seed);
        py::array_t<double> images({static_cast<int>(set.size()), size, size, 3});
        auto buf = images.mutable_unchecked<4>();
        for (std::size_t i = 0; i < set.size(); ++i)
          for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
              for (int c = 0; c < 3; ++c)
                buf(static_cast<py::ssize_t>(i), y, x, c) = set.images[i].at(y, x, c);
        py::array_t<int> labels(static_cast<py::ssize_t>(set.size()));
        std::copy(set.labels.begin(), set.labels.end(), labels.mutable_data());
        return py::make_tuple(images, labels);
      },
      py::arg("n_classes"), py::arg("per_class"), py::arg("size"), py::arg("seed"),
      "Seeded synthetic dataset; returns (images[N,H,W,3], labels[N])");

  m.def(
      "augment",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
         const data::AugmentationPipeline& pipeline, std::uint64_t seed) {
        Rng rng(seed);
        return image_to_array(data::augment(image_from_array(image), pipeline, rng));
      },
      py::arg("image"), py::arg("pipeline"), py::arg("seed"));

  m.def(
      "make_two_views",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
         const data::AugmentationPipeline& pipeline, std::uint64_t seed) {
        Rng rng(seed);
        const auto [a, b] = data::make_two_views(image_from_array(image), pipeline, rng);
        return py::make_tuple(image_to_array(a), image_to_array(b));
      },
      py::arg("image"), py::arg("pipeline"), py::arg("seed"));

  // ----- contrast -----------------------------------------------------------
  py::class_<contrast::MemoryQueue>(m, "MemoryQueue")
      .def(py::init<int, int>(), py::arg("capacity"), py::arg("dim"))
      .def_property_readonly("capacity", &contrast::MemoryQueue::capacity)
      .def_property_readonly("dim", &contrast::MemoryQueue::dim)
      .def_readonly("filled", &contrast::MemoryQueue::filled)
      .def_readonly("write_ptr", &contrast::MemoryQueue::write_ptr)
      .def_property_readonly("keys",
                             [](const contrast::MemoryQueue& q) { return mat_to_array(q.keys); })
      .def_property_readonly("labels",
                             [](const contrast::MemoryQueue& q) { return q.labels; })
      .def(
          "enqueue",
          [](contrast::MemoryQueue& q,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& keys,
             const std::vector<int>& labels) { contrast::enqueue(q, mat_from_array(keys), labels); },
          py::arg("keys"), py::arg("labels"));

  m.def(
      "l2_normalize",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
        return vec_to_array(contrast::l2_normalize(vec_from_array(v)));
      },
      py::arg("v"));

  m.def(
      "infonce_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& k_pos,
         const contrast::MemoryQueue& queue, double tau) {
        const auto res = contrast::infonce_loss(vec_from_array(q), vec_from_array(k_pos), queue, tau);
        return py::make_tuple(res.value, vec_to_array(res.grad_q));
      },
      py::arg("q"), py::arg("k_pos"), py::arg("queue"), py::arg("tau"),
      "Instance-discrimination loss; returns (loss, grad_q)");

  m.def(
      "exemplar_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& k_pos,
         const contrast::MemoryQueue& queue, int y_i, double tau) {
        const auto res =
            contrast::exemplar_loss(vec_from_array(q), vec_from_array(k_pos), queue, y_i, tau);
        return py::make_tuple(res.value, vec_to_array(res.grad_q));
      },
      py::arg("q"), py::arg("k_pos"), py::arg("queue"), py::arg("y_i"), py::arg("tau"),
      "Label-filtered contrastive loss; returns (loss, grad_q)");

  m.def(
      "cross_entropy_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
         const std::vector<int>& labels) {
        return contrast::cross_entropy_loss(mat_from_array(logits), labels);
      },
      py::arg("logits"), py::arg("labels"));

  m.def(
      "momentum_update",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& query_params,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& key_params,
         double momentum) {
        const auto out = contrast::momentum_update(
            {vec_from_array(query_params), vec_from_array(key_params), momentum});
        return vec_to_array(out.key_params);
      },
      py::arg("query_params"), py::arg("key_params"), py::arg("momentum"),
      "Returns the updated key parameter vector");

  // ----- eval ---------------------------------------------------------------
  m.def(
      "confidence_interval",
      [](const std::vector<double>& samples) {
        const auto r = eval::confidence_interval(samples);
        return py::make_tuple(r.mean, r.half_width, r.n);
      },
      py::arg("samples"), "Mean and 95% half-interval, (mean, half_width, n)");

  m.def(
      "linear_probe",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& train_feats,
         const std::vector<int>& train_labels,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& test_feats,
         const std::vector<int>& test_labels, int epochs, double lr) {
        eval::ProbeConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        return eval::linear_probe(mat_from_array(train_feats), train_labels,
                                  mat_from_array(test_feats), test_labels, cfg);
      },
      py::arg("train_feats"), py::arg("train_labels"), py::arg("test_feats"),
      py::arg("test_labels"), py::arg("epochs") = 200, py::arg("lr") = 0.5);

  m.def(
      "landmark_error",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& gt, double iod) {
        eval::LandmarkSet p{mat_from_array(pred), iod};
        eval::LandmarkSet g{mat_from_array(gt), iod};
        return eval::landmark_error(p, g);
      },
      py::arg("pred"), py::arg("gt"), py::arg("inter_ocular"));

  // ----- diagnose -----------------------------------------------------------
  py::class_<diagnose::Box>(m, "Box")
      .def(py::init([](double x0, double y0, double x1, double y1) {
             diagnose::Box b{x0, y0, x1, y1};
             b.validate();
             return b;
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readonly("x_min", &diagnose::Box::x_min)
      .def_readonly("y_min", &diagnose::Box::y_min)
      .def_readonly("x_max", &diagnose::Box::x_max)
      .def_readonly("y_max", &diagnose::Box::y_max);

  m.def("iou", &diagnose::iou, py::arg("a"), py::arg("b"));

  py::class_<diagnose::SimilarityMap>(m, "SimilarityMap")
      .def(py::init<>())
      .def("add_group", &diagnose::SimilarityMap::add_group, py::arg("categories"))
      .def("similar", &diagnose::SimilarityMap::similar, py::arg("a"), py::arg("b"));

  m.def(
      "categorize_fp",
      [](const diagnose::Box& box, int category, const std::string& image_id,
         const std::vector<py::tuple>& gts, const diagnose::SimilarityMap& sim, double weak_iou,
         double correct_iou) {
        std::vector<diagnose::GroundTruthBox> gt_boxes;
        for (const auto& t : gts)
          gt_boxes.push_back({t[0].cast<diagnose::Box>(), t[1].cast<int>(),
                              t[2].cast<std::string>()});
        diagnose::Detection det{box, 1.0, category, image_id};
        return diagnose::fp_category_name(
            diagnose::categorize_fp(det, gt_boxes, sim, weak_iou, correct_iou));
      },
      py::arg("box"), py::arg("category"), py::arg("image_id"), py::arg("ground_truths"),
      py::arg("similarity"), py::arg("weak_iou") = 0.1, py::arg("correct_iou") = 0.5,
      "Taxonomy label (Loc/Sim/Oth/BG) for a false positive");

  // ----- inversion ----------------------------------------------------------
  m.def("default_reconstructor_spec",
        [] { return inversion::default_reconstructor_spec().to_string(); });
  m.def(
      "psnr",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
        return inversion::psnr(image_from_array(a), image_from_array(b));
      },
      py::arg("a"), py::arg("b"));
}
