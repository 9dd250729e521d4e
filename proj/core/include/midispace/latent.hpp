#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "midispace/model.hpp"
#include "midispace/rng.hpp"

namespace midispace {

/// z ~ N(0, I) in latent_dim coordinates.
std::vector<double> sample_prior(int latent_dim, Rng& rng);

/// Spherical interpolation: the direction follows the great-circle arc
/// between the two inputs, the magnitude interpolates linearly between their
/// norms (they coincide on the unit sphere). Near-parallel and near-opposite
/// pairs fall back to linear interpolation; zero vectors are rejected.
std::vector<double> slerp(const std::vector<double>& z0, const std::vector<double>& z1,
                          double alpha);

/// Mean latent difference between examples with and without an attribute.
struct AttributeVector {
  std::vector<double> v;
  std::string attribute_name;
  long n_with = 0;
  long n_without = 0;
};

/// Encodes both measures to their posterior means, slerps at
/// alpha = i/(n_steps - 1) and decodes each point. Interpolants borrow the
/// chord conditioning of the nearer endpoint.
std::vector<Measure> interpolate_measures(Model& model, const Measure& x0, const Measure& x1,
                                          int n_steps, double temperature, Rng& rng);

AttributeVector attribute_vector(Model& model, const std::vector<Measure>& with_set,
                                 const std::vector<Measure>& without_set,
                                 const std::string& name = "");

/// decode(mu(x) + scale * v) under x's own chords.
Measure apply_attribute(Model& model, const Measure& x, const AttributeVector& v, double scale,
                        double temperature, Rng& rng);

/// One decoded measure per consecutive chord pair, all from the same latent
/// point; the rng advances across measures so repeated chords vamp rather
/// than copy. The progression must have even length >= 2.
std::vector<Measure> decode_progression(Model& model, const std::vector<double>& z,
                                        const std::vector<std::uint8_t>& progression,
                                        double temperature, Rng& rng);

// attribute predicates over decoded measures
int pitch_range(const Measure& m);    // max - min pitch, 0 when empty
int track_count(const Measure& m);    // non-missing slots
bool strings_only(const Measure& m);  // >= 1 pitched track, all programs in 40..51
int note_density(const Measure& m);   // total note count

}  // namespace midispace
