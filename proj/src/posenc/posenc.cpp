#include "hyper/posenc/posenc.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hyper::posenc {

Kind parse_kind(std::string_view text) {
  if (text == "sinusoidal") return Kind::sinusoidal;
  if (text == "all-one") return Kind::all_one;
  if (text == "random") return Kind::random;
  if (text == "magnitude") return Kind::magnitude;
  throw Error("unknown positional encoding '" + std::string(text) +
              "' (expected sinusoidal, all-one, random or magnitude)");
}

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::sinusoidal:
      return "sinusoidal";
    case Kind::all_one:
      return "all-one";
    case Kind::random:
      return "random";
    case Kind::magnitude:
      return "magnitude";
  }
  return "sinusoidal";
}

void validate(const PosEncConfig& cfg) {
  if (cfg.dim == 0 || cfg.dim % 2 != 0) {
    throw Error("positional encoding dimension must be even and positive, got " + std::to_string(cfg.dim));
  }
  if (!(cfg.base > 1.0)) throw Error("positional encoding base must exceed 1");
}

bool injectivity_precondition(const PosEncConfig& cfg) {
  return cfg.dim != 2 && cfg.dim != 4 && cfg.dim != 8;
}

std::vector<double> frequencies(const PosEncConfig& cfg) {
  std::vector<double> w(cfg.dim / 2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(cfg.base, -2.0 * static_cast<double>(i) / static_cast<double>(cfg.dim));
  }
  return w;
}

std::vector<double> sinusoid(std::size_t pos, const PosEncConfig& cfg) {
  validate(cfg);
  const auto w = frequencies(cfg);
  std::vector<double> p(cfg.dim);
  const double a = static_cast<double>(pos);
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[2 * i] = std::sin(a * w[i]);
    p[2 * i + 1] = std::cos(a * w[i]);
  }
  return p;
}

std::vector<double> encode(std::size_t pos, const PosEncConfig& cfg) {
  validate(cfg);
  switch (cfg.kind) {
    case Kind::sinusoidal:
      return sinusoid(pos, cfg);
    case Kind::all_one:
      return std::vector<double>(cfg.dim, 1.0);
    case Kind::magnitude:
      return std::vector<double>(cfg.dim, static_cast<double>(pos));
    case Kind::random: {
      tensor::Rng rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (pos + 1)));
      std::vector<double> p(cfg.dim);
      // Box-Muller keeps the draw independent of the standard library.
      for (std::size_t i = 0; i < cfg.dim; i += 2) {
        const double u1 = 1.0 - tensor::uniform01(rng);
        const double u2 = tensor::uniform01(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        p[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        p[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
      }
      return p;
    }
  }
  return sinusoid(pos, cfg);
}

std::vector<double> pair_input(std::size_t a, std::size_t b, const PosEncConfig& cfg) {
  auto pa = encode(a, cfg);
  const auto pb = encode(b, cfg);
  pa.insert(pa.end(), pb.begin(), pb.end());
  return pa;
}

template <typename T>
tensor::Tensor<T> position_table(std::size_t count, const PosEncConfig& cfg) {
  std::vector<T> values;
  values.reserve(count * cfg.dim);
  for (std::size_t pos = 1; pos <= count; ++pos) {
    for (double v : encode(pos, cfg)) values.push_back(static_cast<T>(v));
  }
  return tensor::Tensor<T>::from({count, cfg.dim}, std::move(values));
}

template <typename T>
EncPIParams<T> EncPIParams<T>::init(std::size_t dim, tensor::Rng& rng) {
  EncPIParams p;
  p.w1 = tensor::glorot_uniform<T>(2 * dim, dim, rng);
  p.b1 = tensor::constant_parameter<T>({dim}, T(0));
  p.w2 = tensor::glorot_uniform<T>(dim, dim, rng);
  p.b2 = tensor::constant_parameter<T>({dim}, T(0));
  return p;
}

template <typename T>
tensor::Tensor<T> enc_pi(std::span<const relgraph::PositionPair> pairs, const EncPIParams<T>& params,
                         const PosEncConfig& cfg) {
  std::vector<T> input;
  input.reserve(pairs.size() * 2 * cfg.dim);
  for (const auto& pp : pairs) {
    for (double v : pair_input(pp.a, pp.b, cfg)) input.push_back(static_cast<T>(v));
  }
  auto x = tensor::Tensor<T>::from({pairs.size(), 2 * cfg.dim}, std::move(input));
  auto hidden = tensor::relu(tensor::linear(x, params.w1, params.b1));
  return tensor::linear(hidden, params.w2, params.b2);
}

template <typename T>
std::vector<T> enc_pi(std::size_t a, std::size_t b, const EncPIParams<T>& params, const PosEncConfig& cfg) {
  const relgraph::PositionPair pp{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  auto out = enc_pi<T>(std::span<const relgraph::PositionPair>(&pp, 1), params, cfg);
  return {out.values().begin(), out.values().end()};
}

template tensor::Tensor<float> position_table<float>(std::size_t, const PosEncConfig&);
template tensor::Tensor<double> position_table<double>(std::size_t, const PosEncConfig&);
template struct EncPIParams<float>;
template struct EncPIParams<double>;
template tensor::Tensor<float> enc_pi<float>(std::span<const relgraph::PositionPair>, const EncPIParams<float>&,
                                             const PosEncConfig&);
template tensor::Tensor<double> enc_pi<double>(std::span<const relgraph::PositionPair>, const EncPIParams<double>&,
                                               const PosEncConfig&);
template std::vector<float> enc_pi<float>(std::size_t, std::size_t, const EncPIParams<float>&, const PosEncConfig&);
template std::vector<double> enc_pi<double>(std::size_t, std::size_t, const EncPIParams<double>&,
                                            const PosEncConfig&);

}  // namespace hyper::posenc
