#include "midispace/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "midispace/errors.hpp"

namespace midispace {

std::vector<double> sample_prior(int latent_dim, Rng& rng) {
  std::vector<double> z(latent_dim);
  for (auto& v : z) v = rng.normal();
  return z;
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> slerp(const std::vector<double>& z0, const std::vector<double>& z1,
                          double alpha) {
  if (z0.size() != z1.size()) throw DataError("slerp inputs differ in dimension");
  const double n0 = norm2(z0);
  const double n1 = norm2(z1);
  if (n0 == 0.0 || n1 == 0.0) throw DataError("slerp input has zero norm");
  if (alpha == 0.0) return z0;
  if (alpha == 1.0) return z1;

  double dot = 0.0;
  for (std::size_t i = 0; i < z0.size(); ++i) dot += (z0[i] / n0) * (z1[i] / n1);
  dot = std::clamp(dot, -1.0, 1.0);
  const double omega = std::acos(dot);

  std::vector<double> out(z0.size());
  if (omega < 1e-6 || std::numbers::pi - omega < 1e-6) {
    for (std::size_t i = 0; i < z0.size(); ++i)
      out[i] = (1.0 - alpha) * z0[i] + alpha * z1[i];
    return out;
  }
  const double s = std::sin(omega);
  const double w0 = std::sin((1.0 - alpha) * omega) / s;
  const double w1 = std::sin(alpha * omega) / s;
  const double norm = (1.0 - alpha) * n0 + alpha * n1;
  for (std::size_t i = 0; i < z0.size(); ++i)
    out[i] = norm * (w0 * z0[i] / n0 + w1 * z1[i] / n1);
  return out;
}

std::vector<Measure> interpolate_measures(Model& model, const Measure& x0, const Measure& x1,
                                          int n_steps, double temperature, Rng& rng) {
  if (n_steps < 2) throw DataError("interpolation needs at least 2 steps");
  const auto mu0 = model.encode_values(x0).mu;
  const auto mu1 = model.encode_values(x1).mu;

  std::vector<Measure> out;
  out.reserve(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    const double alpha = static_cast<double>(i) / (n_steps - 1);
    const auto& chords = alpha <= 0.5 ? x0.chords : x1.chords;
    out.push_back(model.sample_decode(slerp(mu0, mu1, alpha), chords, temperature, rng));
  }
  return out;
}

namespace {

std::vector<double> mean_mu(Model& model, const std::vector<Measure>& set) {
  std::vector<double> mean(model.config().latent_dim, 0.0);
  for (const auto& m : set) {
    const auto mu = model.encode_values(m).mu;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += mu[i];
  }
  for (auto& v : mean) v /= static_cast<double>(set.size());
  return mean;
}

}  // namespace

AttributeVector attribute_vector(Model& model, const std::vector<Measure>& with_set,
                                 const std::vector<Measure>& without_set,
                                 const std::string& name) {
  if (with_set.empty() || without_set.empty())
    throw DataError("attribute vector needs non-empty with and without sets");
  AttributeVector out;
  out.attribute_name = name;
  out.n_with = static_cast<long>(with_set.size());
  out.n_without = static_cast<long>(without_set.size());
  out.v = mean_mu(model, with_set);
  const auto base = mean_mu(model, without_set);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= base[i];
  return out;
}

Measure apply_attribute(Model& model, const Measure& x, const AttributeVector& v, double scale,
                        double temperature, Rng& rng) {
  if (static_cast<int>(v.v.size()) != model.config().latent_dim)
    throw DataError("attribute vector dimension does not match the model");
  auto z = model.encode_values(x).mu;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += scale * v.v[i];
  return model.sample_decode(z, x.chords, temperature, rng);
}

std::vector<Measure> decode_progression(Model& model, const std::vector<double>& z,
                                        const std::vector<std::uint8_t>& progression,
                                        double temperature, Rng& rng) {
  if (progression.size() < 2 || progression.size() % 2 != 0)
    throw DataError("chord progression must have even length >= 2");
  for (auto c : progression)
    if (c >= kNumChordClasses) throw DataError("chord class out of range in progression");

  std::vector<Measure> out;
  out.reserve(progression.size() / 2);
  for (std::size_t i = 0; i + 1 < progression.size(); i += 2)
    out.push_back(
        model.sample_decode(z, {progression[i], progression[i + 1]}, temperature, rng));
  return out;
}

int pitch_range(const Measure& m) {
  int lo = 128;
  int hi = -1;
  for (const auto& content : decode_measure(m))
    for (const auto& n : content.notes) {
      lo = std::min(lo, n.pitch);
      hi = std::max(hi, n.pitch);
    }
  return hi < lo ? 0 : hi - lo;
}

int track_count(const Measure& m) {
  int count = 0;
  for (const auto& track : m.tracks)
    if (!is_missing_track(track)) ++count;
  return count;
}

bool strings_only(const Measure& m) {
  bool any_pitched = false;
  for (const auto& content : decode_measure(m)) {
    if (content.program == kDrumProgram) continue;
    any_pitched = true;
    if (content.program < 40 || content.program > 51) return false;
  }
  return any_pitched;
}

int note_density(const Measure& m) {
  int count = 0;
  for (const auto& content : decode_measure(m)) count += static_cast<int>(content.notes.size());
  return count;
}

}  // namespace midispace
