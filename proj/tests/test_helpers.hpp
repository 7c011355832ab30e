#pragma once

#include <random>

#include "gavatar/geometry.hpp"
#include "gavatar/types.hpp"

namespace gavatar::testing {

inline Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Quat q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  return q.normalized();
}

inline Vec3 random_vec3(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  return Vec3(d(rng), d(rng), d(rng));
}

// A few non-degenerate triangles with a trivial part map.
inline TriMesh random_mesh(std::mt19937_64& rng, int n_faces = 4) {
  TriMesh mesh;
  for (int f = 0; f < n_faces; ++f) {
    Vec3 a = random_vec3(rng), b, c;
    do {
      b = random_vec3(rng);
      c = random_vec3(rng);
    } while ((b - a).cross(c - a).norm() < 1e-3);
    const Index base = static_cast<Index>(mesh.vertices.size());
    mesh.vertices.push_back(a);
    mesh.vertices.push_back(b);
    mesh.vertices.push_back(c);
    mesh.faces.push_back({base, base + 1, base + 2});
    mesh.part_of_face.push_back(0);
  }
  mesh.part_names = {"all"};
  return mesh;
}

}  // namespace gavatar::testing
