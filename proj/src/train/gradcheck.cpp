#include "ser/train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "ser/net/layers.hpp"
#include "ser/net/model.hpp"
#include "ser/rng.hpp"

namespace ser::train {

using net::Mat;

double relative_error(const Mat<double>& analytic, const Mat<double>& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw ShapeError("gradient shapes differ");
  }
  if (analytic.size() == 0) return 0.0;
  const double diff = (analytic - numeric).cwiseAbs().maxCoeff();
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
  return diff / scale;
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

net::ModelSpec gradcheck_tiny_spec(net::ConvMode mode) {
  net::ModelSpec spec;
  if (mode == net::ConvMode::kTemporal) {
    spec.stages = {{{3, 0, 1, 1, 1, 4, net::ConvMode::kTemporal}, 2, 1},
                   {{2, 0, 1, 1, 0, 3, net::ConvMode::kTemporal}, 1, 1}};
  } else {
    spec.stages = {{{3, 3, 1, 2, 1, 3, net::ConvMode::k2D}, 2, 2},
                   {{2, 2, 1, 1, 0, 2, net::ConvMode::k2D}, 1, 1}};
  }
  spec.recurrent_hidden = 3;
  spec.dense_units = {5};
  spec.n_emotions = 4;
  spec.multitask = true;
  return spec;
}

namespace {

Mat<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Checks d/dθ of sum(r ⊙ f(x)) for an isolated layer against central
// differences, for every tensor in `params` and for the input.
struct LayerProbe {
  std::function<Mat<double>(const Mat<double>&)> forward;
  std::function<Mat<double>(const Mat<double>&)> backward;  // upstream -> input gradient
  std::vector<net::Tensor<double>*> params;
};

void check_layer(const std::string& layer, LayerProbe& probe, Mat<double> x, std::mt19937_64& rng, double h,
                 GradcheckReport& report) {
  const Mat<double> y0 = probe.forward(x);
  const Mat<double> r = random_matrix(y0.rows(), y0.cols(), rng);
  for (auto* t : probe.params) t->grad.setZero();
  const Mat<double> dx = probe.backward(r);
  auto objective = [&](const Mat<double>& input) { return probe.forward(input).cwiseProduct(r).sum(); };

  for (auto* t : probe.params) {
    Mat<double> numeric(t->value.rows(), t->value.cols());
    for (Eigen::Index i = 0; i < t->value.size(); ++i) {
      double& w = t->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = objective(x);
      w = saved - h;
      const double down = objective(x);
      w = saved;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    const auto short_name = t->name.substr(t->name.find('.') + 1);
    report.entries.push_back({layer, short_name, relative_error(t->grad, numeric)});
  }
  Mat<double> numeric(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = objective(x);
    x.data()[i] = saved - h;
    const double down = objective(x);
    x.data()[i] = saved;
    numeric.data()[i] = (up - down) / (2 * h);
  }
  report.entries.push_back({layer, "input", relative_error(dx, numeric)});
}

template <class Margin>
Mat<double> sample_away_from_kinks(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                   const GradcheckOptions& opts, Margin margin_of) {
  for (int attempt = 0; attempt <= opts.max_resamples; ++attempt) {
    Mat<double> x = random_matrix(rows, cols, rng);
    if (margin_of(x) >= opts.kink_margin) return x;
  }
  throw NumericalError("gradcheck could not sample inputs away from kinks");
}

net::Activation<double> as_activation(const Mat<double>& x, int batch, int height, int width, int channels,
                                      std::vector<int> valid) {
  net::Activation<double> a;
  a.data = x;
  a.batch = batch;
  a.height = height;
  a.width = width;
  a.channels = channels;
  a.valid = std::move(valid);
  return a;
}

void check_layers(std::mt19937_64& rng, const GradcheckOptions& opts, GradcheckReport& report) {
  const double h = opts.step;
  std::mt19937_64 init(rng());

  {
    net::ParameterSet<double> ps;
    net::Dense<double> dense("dense", 7, 5, ps, init);
    random_matrix(1, 5, rng).swap(ps.at("dense.b").value);
    LayerProbe p{[&](const Mat<double>& x) { return dense.forward(x); },
                 [&](const Mat<double>& dy) { return dense.backward(dy); },
                 {&ps.at("dense.w"), &ps.at("dense.b")}};
    check_layer("dense", p, random_matrix(3, 7, rng), rng, h, report);
  }
  {
    net::Relu<double> relu;
    LayerProbe p{[&](const Mat<double>& x) { return relu.forward(x); },
                 [&](const Mat<double>& dy) { return relu.backward(dy); },
                 {}};
    auto x = sample_away_from_kinks(4, 6, rng, opts, [](const Mat<double>& m) { return m.cwiseAbs().minCoeff(); });
    check_layer("relu", p, x, rng, h, report);
  }
  {
    net::Dropout<double> drop(0.5);
    LayerProbe p{[&](const Mat<double>& x) { return drop.forward(x, true, 99); },
                 [&](const Mat<double>& dy) { return drop.backward(dy); },
                 {}};
    check_layer("dropout", p, random_matrix(4, 6, rng), rng, h, report);
  }
  {
    net::ParameterSet<double> ps;
    net::ConvSpec spec{3, 0, 2, 1, 1, 3, net::ConvMode::kTemporal};
    net::Conv2D<double> conv("conv", spec, {12, 9}, 2, ps, init);
    random_matrix(1, 3, rng).swap(ps.at("conv.b").value);
    const std::vector<int> valid{12, 7};
    LayerProbe p{[&](const Mat<double>& x) { return conv.forward(as_activation(x, 2, 12, 9, 2, valid)).data; },
                 [&](const Mat<double>& dy) {
                   const auto o = conv.output_shape();
                   return conv.backward(as_activation(dy, 2, o.height, o.width, 3, {})).data;
                 },
                 {&ps.at("conv.w"), &ps.at("conv.b")}};
    check_layer("conv_temporal", p, random_matrix(24, 18, rng), rng, h, report);
  }
  {
    net::ParameterSet<double> ps;
    net::ConvSpec spec{3, 2, 2, 1, 1, 3, net::ConvMode::k2D};
    net::Conv2D<double> conv("conv", spec, {10, 8}, 2, ps, init);
    random_matrix(1, 3, rng).swap(ps.at("conv.b").value);
    const std::vector<int> valid{10, 6};
    LayerProbe p{[&](const Mat<double>& x) { return conv.forward(as_activation(x, 2, 10, 8, 2, valid)).data; },
                 [&](const Mat<double>& dy) {
                   const auto o = conv.output_shape();
                   return conv.backward(as_activation(dy, 2, o.height, o.width, 3, {})).data;
                 },
                 {&ps.at("conv.w"), &ps.at("conv.b")}};
    check_layer("conv_2d", p, random_matrix(20, 16, rng), rng, h, report);
  }
  {
    net::MaxPool<double> pool(2, 2);
    LayerProbe p{[&](const Mat<double>& x) { return pool.forward(as_activation(x, 2, 8, 6, 2, {8, 8})).data; },
                 [&](const Mat<double>& dy) { return pool.backward(as_activation(dy, 2, 4, 3, 2, {})).data; },
                 {}};
    auto x = sample_away_from_kinks(16, 12, rng, opts, [&](const Mat<double>& m) {
      net::MaxPool<double> probe(2, 2);
      probe.forward(as_activation(m.cwiseAbs() + Mat<double>::Constant(m.rows(), m.cols(), 0.1), 2, 8, 6, 2, {8, 8}));
      return probe.kink_margin();
    });
    x = x.cwiseAbs() + Mat<double>::Constant(x.rows(), x.cols(), 0.1);
    check_layer("maxpool", p, x, rng, h, report);
  }
  {
    net::ParameterSet<double> ps;
    net::BiLstm<double> lstm("lstm", 4, 3, ps, init);
    random_matrix(1, 12, rng).swap(ps.at("lstm.fwd.b").value);
    random_matrix(1, 12, rng).swap(ps.at("lstm.bwd.b").value);
    const std::vector<int> valid{6, 4};
    LayerProbe p{[&](const Mat<double>& x) { return lstm.forward(as_activation(x, 2, 6, 1, 4, valid)).data; },
                 [&](const Mat<double>& dy) { return lstm.backward(as_activation(dy, 2, 6, 1, 6, {})).data; },
                 {}};
    for (auto& t : ps) p.params.push_back(&t);
    check_layer("bilstm", p, random_matrix(12, 4, rng), rng, h, report);
  }
  {
    const std::vector<int> labels{0, 3, 1};
    LayerProbe p;
    Mat<double> grad;
    // Scalar loss: the upstream factor multiplies the single output.
    p.forward = [&](const Mat<double>& x) {
      Mat<double> out(1, 1);
      out(0, 0) = net::softmax_cross_entropy_batch<double>(x, labels, &grad);
      return out;
    };
    p.backward = [&](const Mat<double>& dy) { return Mat<double>(grad * dy(0, 0)); };
    check_layer("softmax_xent", p, random_matrix(3, 4, rng), rng, h, report);
  }
}

void check_model(const net::ModelSpec& spec, std::mt19937_64& rng, std::uint64_t seed, const GradcheckOptions& opts,
                 GradcheckReport& report) {
  const int batch = 2, height = kGradcheckHeight, width = kGradcheckWidth;
  net::Model<double> model(spec, {height, width}, seed);
  model.corrupt_backward_for_testing(opts.corrupt_factor);
  const std::vector<int> valid{height, 8};
  std::vector<int> emotion{static_cast<int>(rng() % spec.n_emotions), static_cast<int>(rng() % spec.n_emotions)};
  std::vector<int> gender{0, 1};
  const net::ForwardOptions fo{true, derive_seed(seed, 0xD0)};

  Mat<double> x;
  for (int attempt = 0;; ++attempt) {
    x = random_matrix(batch * height, width, rng);
    model.forward(x, valid, fo);
    if (model.kink_margin() >= opts.kink_margin) break;
    if (attempt == opts.max_resamples) throw NumericalError("gradcheck could not sample inputs away from kinks");
  }
  model.loss(x, valid, emotion, gender, fo, true);
  const double h = opts.step;
  for (auto& t : model.params()) {
    const Mat<double> analytic = t.grad;
    Mat<double> numeric(t.value.rows(), t.value.cols());
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      double& w = t.value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = model.loss(x, valid, emotion, gender, fo, false).total;
      w = saved - h;
      const double down = model.loss(x, valid, emotion, gender, fo, false).total;
      w = saved;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    report.entries.push_back({"model", t.name, relative_error(analytic, numeric)});
  }
}

}  // namespace

GradcheckReport gradcheck(const net::ModelSpec& spec, std::uint64_t seed, const GradcheckOptions& opts) {
  GradcheckReport report;
  std::mt19937_64 rng(derive_seed(seed, 0x6C));
  if (opts.layers) check_layers(rng, opts, report);
  check_model(spec, rng, seed, opts, report);
  return report;
}

nlohmann::ordered_json gradcheck_to_json(const GradcheckReport& report, double tolerance) {
  nlohmann::ordered_json j;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"layer", e.layer}, {"tensor", e.tensor}, {"max_rel_error", e.max_rel_error}});
  }
  j["entries"] = entries;
  j["worst"] = report.worst();
  j["tolerance"] = tolerance;
  j["passed"] = report.passed(tolerance);
  return j;
}

}  // namespace ser::train
