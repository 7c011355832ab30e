#include "gavatar/formats.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gavatar {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::BadFile, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadFile, "cannot open " + path);
  return in;
}

void write_vec3(std::ostream& out, const Vec3& v) {
  out << fmt_double(v.x()) << " " << fmt_double(v.y()) << " " << fmt_double(v.z());
}

Vec3 parse_vec3(std::istringstream& ss, const std::string& context) {
  Vec3 v;
  if (!(ss >> v.x() >> v.y() >> v.z())) {
    throw Error(ErrorKind::BadFile, "expected three numbers in " + context);
  }
  return v;
}

}  // namespace

void write_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Vec3& v : mesh.vertices) {
    out << "v ";
    write_vec3(out, v);
    out << "\n";
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  }
  if (!out) throw Error(ErrorKind::BadFile, "write failed for " + path);
}

TriMesh read_obj(const std::string& path) {
  std::ifstream in = open_in(path);
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      mesh.vertices.push_back(parse_vec3(ss, path + ":" + std::to_string(line_no)));
    } else if (tag == "f") {
      std::array<Index, 3> face{};
      for (int k = 0; k < 3; ++k) {
        std::string token;
        if (!(ss >> token)) {
          throw Error(ErrorKind::BadFile, path + ": face needs three indices at line " +
                                              std::to_string(line_no));
        }
        // Accept "i", "i/t", "i/t/n" forms; only the vertex index is used.
        const long idx = std::strtol(token.c_str(), nullptr, 10);
        if (idx < 1 || static_cast<std::size_t>(idx) > mesh.vertices.size()) {
          throw Error(ErrorKind::BadFile, path + ": vertex index out of range at line " +
                                              std::to_string(line_no));
        }
        face[static_cast<std::size_t>(k)] = static_cast<Index>(idx - 1);
      }
      std::string extra;
      if (ss >> extra) {
        throw Error(ErrorKind::BadFile,
                    path + ": only triangles are supported, line " + std::to_string(line_no));
      }
      mesh.faces.push_back(face);
    }
    // All other records (vn, vt, o, g, s, mtllib, usemtl) are ignored.
  }
  mesh.part_of_face.assign(mesh.faces.size(), 0);
  mesh.part_names = {"all"};
  return mesh;
}

void write_parts(const TriMesh& mesh, const std::string& path, const MouthAugmentation* aug,
                 int mouth_part) {
  std::ofstream out = open_out(path);
  const auto by_part = mesh.faces_of_part();
  const std::size_t base_faces =
      aug != nullptr ? mesh.num_faces() - aug->new_faces.size() : mesh.num_faces();
  for (int p = 0; p < mesh.num_parts(); ++p) {
    const auto& faces = by_part[static_cast<std::size_t>(p)];
    if (aug != nullptr && p == mouth_part) {
      // The mouth part is written split into its upper/lower labels.
      for (const char* label : {"upper", "lower"}) {
        out << "part " << mesh.part_names[static_cast<std::size_t>(p)] << ":" << label;
        for (Index f : faces) {
          const MouthPart mp = aug->part_label[f - base_faces];
          const bool is_upper = mp == MouthPart::Upper;
          if (is_upper == (std::string(label) == "upper")) out << " " << f;
        }
        out << "\n";
      }
      continue;
    }
    out << "part " << mesh.part_names[static_cast<std::size_t>(p)];
    for (Index f : faces) out << " " << f;
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::BadFile, "write failed for " + path);
}

void read_parts(TriMesh& mesh, const std::string& path) {
  std::ifstream in = open_in(path);
  mesh.part_names.clear();
  mesh.part_of_face.assign(mesh.num_faces(), -1);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag != "part") throw Error(ErrorKind::BadFile, path + ": expected 'part' records");
    std::string name;
    if (!(ss >> name)) throw Error(ErrorKind::BadFile, path + ": part needs a name");
    const auto colon = name.find(':');
    if (colon != std::string::npos) name = name.substr(0, colon);  // merge labeled groups
    int part_id = -1;
    for (std::size_t i = 0; i < mesh.part_names.size(); ++i) {
      if (mesh.part_names[i] == name) part_id = static_cast<int>(i);
    }
    if (part_id < 0) {
      part_id = static_cast<int>(mesh.part_names.size());
      mesh.part_names.push_back(name);
    }
    Index f;
    while (ss >> f) {
      if (f >= mesh.num_faces()) {
        throw Error(ErrorKind::BadFile, path + ": face id " + std::to_string(f) + " out of range");
      }
      if (mesh.part_of_face[f] != -1) {
        throw Error(ErrorKind::BadFile,
                    path + ": face " + std::to_string(f) + " assigned to two parts");
      }
      mesh.part_of_face[f] = part_id;
    }
  }
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.part_of_face[f] < 0) {
      throw Error(ErrorKind::UnassignedFace,
                  path + ": face " + std::to_string(f) + " missing from the part mask");
    }
  }
  mesh.validate();
}

void write_rings(const RingSpec& rings, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "ring upper";
  for (Index id : rings.upper) out << " " << id;
  out << "\nring lower";
  for (Index id : rings.lower) out << " " << id;
  out << "\n";
}

RingSpec read_rings(const std::string& path) {
  std::ifstream in = open_in(path);
  RingSpec rings;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag, which;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag != "ring" || !(ss >> which)) {
      throw Error(ErrorKind::BadFile, path + ": expected 'ring upper|lower <ids>'");
    }
    std::vector<Index>& target = which == "upper" ? rings.upper : rings.lower;
    if (which != "upper" && which != "lower") {
      throw Error(ErrorKind::BadFile, path + ": unknown ring '" + which + "'");
    }
    Index id;
    while (ss >> id) target.push_back(id);
  }
  if (rings.upper.empty() || rings.lower.empty()) {
    throw Error(ErrorKind::BadFile, path + ": needs both an upper and a lower ring");
  }
  return rings;
}

void write_augmentation(const MouthAugmentation& aug, std::size_t base_faces,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  out << "base_vertices " << aug.base_vertex_count << "\n";
  out << "base_faces " << base_faces << "\n";
  out << "upper_vertices";
  for (Index id : aug.upper_vertex_ids) out << " " << id;
  out << "\nlower_vertices";
  for (Index id : aug.lower_vertex_ids) out << " " << id;
  out << "\nface_labels ";
  for (MouthPart p : aug.part_label) out << (p == MouthPart::Upper ? 'U' : 'L');
  out << "\n";
}

MouthAugmentation read_augmentation(const TriMesh& augmented_mesh, const std::string& path) {
  std::ifstream in = open_in(path);
  MouthAugmentation aug;
  std::size_t base_faces = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "base_vertices") {
      ss >> aug.base_vertex_count;
    } else if (tag == "base_faces") {
      ss >> base_faces;
    } else if (tag == "upper_vertices") {
      Index id;
      while (ss >> id) aug.upper_vertex_ids.push_back(id);
    } else if (tag == "lower_vertices") {
      Index id;
      while (ss >> id) aug.lower_vertex_ids.push_back(id);
    } else if (tag == "face_labels") {
      std::string labels;
      ss >> labels;
      for (char c : labels) {
        if (c != 'U' && c != 'L') throw Error(ErrorKind::BadFile, path + ": bad face label");
        aug.part_label.push_back(c == 'U' ? MouthPart::Upper : MouthPart::Lower);
      }
    }
  }
  if (aug.base_vertex_count > augmented_mesh.num_vertices() ||
      base_faces + aug.part_label.size() != augmented_mesh.num_faces()) {
    throw Error(ErrorKind::BadFile, path + " does not match the augmented mesh");
  }
  for (std::size_t v = aug.base_vertex_count; v < augmented_mesh.num_vertices(); ++v) {
    aug.new_vertices.push_back(augmented_mesh.vertices[v]);
  }
  for (std::size_t f = base_faces; f < augmented_mesh.num_faces(); ++f) {
    aug.new_faces.push_back(augmented_mesh.faces[f]);
  }
  return aug;
}

void write_camera(const Camera& cam, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "fx " << fmt_double(cam.fx) << "\nfy " << fmt_double(cam.fy) << "\ncx "
      << fmt_double(cam.cx) << "\ncy " << fmt_double(cam.cy) << "\nwidth " << cam.width
      << "\nheight " << cam.height << "\nnear " << fmt_double(cam.near) << "\nw2c_rot";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << " " << fmt_double(cam.w2c_rot(r, c));
  }
  out << "\nw2c_trans ";
  write_vec3(out, cam.w2c_trans);
  out << "\n";
}

Camera read_camera(const std::string& path) {
  std::ifstream in = open_in(path);
  Camera cam;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "fx") ss >> cam.fx;
    else if (tag == "fy") ss >> cam.fy;
    else if (tag == "cx") ss >> cam.cx;
    else if (tag == "cy") ss >> cam.cy;
    else if (tag == "width") ss >> cam.width;
    else if (tag == "height") ss >> cam.height;
    else if (tag == "near") ss >> cam.near;
    else if (tag == "w2c_rot") {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ss >> cam.w2c_rot(r, c);
      }
    } else if (tag == "w2c_trans") {
      cam.w2c_trans = parse_vec3(ss, path);
    }
  }
  if (cam.width <= 0 || cam.height <= 0 || cam.fx <= 0.0 || cam.fy <= 0.0) {
    throw Error(ErrorKind::BadFile, path + ": incomplete camera");
  }
  return cam;
}

void write_rig(const BlendRig& rig, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "psi_dim " << rig.psi_dim() << "\n";
  out << "theta_dim " << rig.theta_dim << "\n";
  out << "jaw_pivot ";
  write_vec3(out, rig.jaw_pivot);
  out << "\njaw_axis ";
  write_vec3(out, rig.jaw_axis);
  out << "\njaw_weights";
  for (std::uint8_t w : rig.jaw_weight) out << " " << static_cast<int>(w);
  out << "\n";
  for (Eigen::Index c = 0; c < rig.expr_basis.cols(); ++c) {
    out << "basis " << c;
    for (Eigen::Index r = 0; r < rig.expr_basis.rows(); ++r) {
      out << " " << fmt_double(rig.expr_basis(r, c));
    }
    out << "\n";
  }
}

void read_rig(BlendRig& rig, const std::string& path) {
  std::ifstream in = open_in(path);
  int psi_dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "psi_dim") {
      ss >> psi_dim;
      rig.expr_basis =
          MatX::Zero(static_cast<Eigen::Index>(3 * rig.base.num_vertices()), psi_dim);
    } else if (tag == "theta_dim") {
      ss >> rig.theta_dim;
    } else if (tag == "jaw_pivot") {
      rig.jaw_pivot = parse_vec3(ss, path);
    } else if (tag == "jaw_axis") {
      rig.jaw_axis = parse_vec3(ss, path);
    } else if (tag == "jaw_weights") {
      rig.jaw_weight.clear();
      int w;
      while (ss >> w) rig.jaw_weight.push_back(static_cast<std::uint8_t>(w));
    } else if (tag == "basis") {
      Eigen::Index col;
      ss >> col;
      for (Eigen::Index r = 0; r < rig.expr_basis.rows(); ++r) {
        if (!(ss >> rig.expr_basis(r, col))) {
          throw Error(ErrorKind::BadFile, path + ": short basis column");
        }
      }
    }
  }
  if (rig.jaw_weight.size() != rig.base.num_vertices()) {
    throw Error(ErrorKind::BadFile, path + ": jaw weights do not match the mesh");
  }
}

void write_params_sequence(const std::vector<RigParams>& seq, const std::string& path) {
  std::ofstream out = open_out(path);
  const int psi_dim = seq.empty() ? 0 : static_cast<int>(seq.front().psi.size());
  const int theta_dim = seq.empty() ? 0 : static_cast<int>(seq.front().theta.size());
  out << "frames " << seq.size() << "\npsi_dim " << psi_dim << "\ntheta_dim " << theta_dim
      << "\n";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const RigParams& p = seq[i];
    out << "frame " << i << " t " << fmt_double(p.t_norm) << " psi";
    for (Eigen::Index k = 0; k < p.psi.size(); ++k) out << " " << fmt_double(p.psi[k]);
    out << " theta";
    for (Eigen::Index k = 0; k < p.theta.size(); ++k) out << " " << fmt_double(p.theta[k]);
    out << " rot ";
    write_vec3(out, p.rotation);
    out << " trans ";
    write_vec3(out, p.translation);
    out << "\n";
  }
}

std::vector<RigParams> read_params_sequence(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<RigParams> seq;
  int psi_dim = 0, theta_dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "psi_dim") ss >> psi_dim;
    else if (tag == "theta_dim") ss >> theta_dim;
    else if (tag == "frame") {
      RigParams p;
      p.psi = VecX::Zero(psi_dim);
      p.theta = VecX::Zero(theta_dim);
      std::size_t idx;
      std::string word;
      ss >> idx;
      while (ss >> word) {
        if (word == "t") ss >> p.t_norm;
        else if (word == "psi") {
          for (int k = 0; k < psi_dim; ++k) ss >> p.psi[k];
        } else if (word == "theta") {
          for (int k = 0; k < theta_dim; ++k) ss >> p.theta[k];
        } else if (word == "rot") {
          p.rotation = parse_vec3(ss, path);
        } else if (word == "trans") {
          p.translation = parse_vec3(ss, path);
        }
      }
      seq.push_back(std::move(p));
    }
  }
  return seq;
}

void write_gt_parts(const std::vector<FaceSet>& set_of_part,
                    const std::vector<std::string>& names, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t p = 0; p < set_of_part.size(); ++p) {
    out << "part " << names[p] << " " << face_set_name(set_of_part[p]) << "\n";
  }
}

std::vector<FaceSet> read_gt_parts(const std::vector<std::string>& names,
                                   const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<FaceSet> out(names.size(), FaceSet::Rigid);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag, name, set;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag != "part" || !(ss >> name >> set)) {
      throw Error(ErrorKind::BadFile, path + ": expected 'part <name> <SET>'");
    }
    for (std::size_t p = 0; p < names.size(); ++p) {
      if (names[p] != name) continue;
      if (set == "RIGID") out[p] = FaceSet::Rigid;
      else if (set == "FLEXIBLE") out[p] = FaceSet::Flexible;
      else if (set == "MOUTH") out[p] = FaceSet::Mouth;
      else throw Error(ErrorKind::BadFile, path + ": unknown set " + set);
    }
  }
  return out;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

namespace {

template <typename T>
void kv_get(const std::map<std::string, std::string>& kv, const std::string& key, T& out) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  std::istringstream ss(it->second);
  if (!(ss >> out)) throw Error(ErrorKind::BadConfig, "cannot parse config key " + key);
}

void kv_get_bool(const std::map<std::string, std::string>& kv, const std::string& key,
                 bool& out) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  if (it->second == "true" || it->second == "1") out = true;
  else if (it->second == "false" || it->second == "0") out = false;
  else throw Error(ErrorKind::BadConfig, "boolean config key " + key + " must be true/false");
}

}  // namespace

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv, TrainConfig cfg) {
  kv_get(kv, "seed", cfg.seed);
  kv_get(kv, "total_steps", cfg.total_steps);
  kv_get(kv, "aps_step", cfg.aps_step);
  kv_get(kv, "lambda", cfg.lambda);
  kv_get(kv, "tau_r", cfg.thresholds.tau_r);
  kv_get(kv, "tau_f", cfg.thresholds.tau_f);
  kv_get(kv, "tau_m", cfg.thresholds.tau_m);
  kv_get(kv, "tau_phi", cfg.thresholds.tau_phi);
  kv_get_bool(kv, "fold_phi", cfg.fold_phi);
  kv_get_bool(kv, "reg_mean_reduction", cfg.reg_mean_reduction);
  kv_get(kv, "reg_weight", cfg.reg_weight);
  kv_get(kv, "lr_mean", cfg.lr_mean);
  kv_get(kv, "lr_rot", cfg.lr_rot);
  kv_get(kv, "lr_scale", cfg.lr_scale);
  kv_get(kv, "lr_color", cfg.lr_color);
  kv_get(kv, "lr_opacity", cfg.lr_opacity);
  kv_get(kv, "lr_deform", cfg.lr_deform);
  kv_get(kv, "per_face_init", cfg.per_face_init);
  kv_get(kv, "init_scale", cfg.init_scale);
  kv_get(kv, "init_opacity", cfg.init_opacity);
  kv_get(kv, "densify_interval", cfg.densify_interval);
  kv_get(kv, "densify_start", cfg.densify_start);
  kv_get(kv, "densify_stop", cfg.densify_stop);
  kv_get(kv, "densify_grad_threshold", cfg.densify.grad_threshold);
  kv_get(kv, "densify_split_scale", cfg.densify.split_scale);
  kv_get(kv, "densify_split_ratio", cfg.densify.split_ratio);
  kv_get(kv, "densify_prune_opacity", cfg.densify.prune_opacity);
  kv_get(kv, "densify_max_splats", cfg.densify.max_splats);
  kv_get(kv, "threads", cfg.threads);
  kv_get(kv, "log_interval", cfg.log_interval);
  kv_get(kv, "test_tail", cfg.test_tail);
  kv_get(kv, "test_stride", cfg.test_stride);
  kv_get_bool(kv, "deform_enabled", cfg.deform_enabled);
  kv_get(kv, "deform_hidden_width", cfg.deform_hidden_width);
  kv_get(kv, "deform_hidden_layers", cfg.deform_hidden_layers);
  kv_get(kv, "deform_freqs", cfg.deform_freqs);
  return cfg;
}

SceneSpec scene_spec_from_kv(const std::map<std::string, std::string>& kv, SceneSpec spec) {
  const auto preset = kv.find("preset");
  if (preset != kv.end()) spec.preset = preset->second;
  kv_get(kv, "frames", spec.frames);
  kv_get(kv, "width", spec.width);
  kv_get(kv, "height", spec.height);
  kv_get(kv, "seed", spec.seed);
  kv_get(kv, "detail_rigid", spec.detail_rigid);
  kv_get(kv, "detail_flexible", spec.detail_flexible);
  return spec;
}

void write_train_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "seed = " << cfg.seed << "\n"
      << "total_steps = " << cfg.total_steps << "\n"
      << "aps_step = " << cfg.aps_step << "\n"
      << "lambda = " << fmt_double(cfg.lambda) << "\n"
      << "tau_r = " << fmt_double(cfg.thresholds.tau_r) << "\n"
      << "tau_f = " << fmt_double(cfg.thresholds.tau_f) << "\n"
      << "tau_m = " << fmt_double(cfg.thresholds.tau_m) << "\n"
      << "tau_phi = " << fmt_double(cfg.thresholds.tau_phi) << "\n"
      << "fold_phi = " << (cfg.fold_phi ? "true" : "false") << "\n"
      << "reg_mean_reduction = " << (cfg.reg_mean_reduction ? "true" : "false") << "\n"
      << "reg_weight = " << fmt_double(cfg.reg_weight) << "\n"
      << "lr_mean = " << fmt_double(cfg.lr_mean) << "\n"
      << "lr_rot = " << fmt_double(cfg.lr_rot) << "\n"
      << "lr_scale = " << fmt_double(cfg.lr_scale) << "\n"
      << "lr_color = " << fmt_double(cfg.lr_color) << "\n"
      << "lr_opacity = " << fmt_double(cfg.lr_opacity) << "\n"
      << "lr_deform = " << fmt_double(cfg.lr_deform) << "\n"
      << "per_face_init = " << cfg.per_face_init << "\n"
      << "init_scale = " << fmt_double(cfg.init_scale) << "\n"
      << "init_opacity = " << fmt_double(cfg.init_opacity) << "\n"
      << "densify_interval = " << cfg.densify_interval << "\n"
      << "densify_start = " << cfg.densify_start << "\n"
      << "densify_stop = " << cfg.densify_stop << "\n"
      << "densify_grad_threshold = " << fmt_double(cfg.densify.grad_threshold) << "\n"
      << "densify_split_scale = " << fmt_double(cfg.densify.split_scale) << "\n"
      << "densify_split_ratio = " << fmt_double(cfg.densify.split_ratio) << "\n"
      << "densify_prune_opacity = " << fmt_double(cfg.densify.prune_opacity) << "\n"
      << "densify_max_splats = " << cfg.densify.max_splats << "\n"
      << "threads = " << cfg.threads << "\n"
      << "log_interval = " << cfg.log_interval << "\n"
      << "test_tail = " << cfg.test_tail << "\n"
      << "test_stride = " << cfg.test_stride << "\n"
      << "deform_enabled = " << (cfg.deform_enabled ? "true" : "false") << "\n"
      << "deform_hidden_width = " << cfg.deform_hidden_width << "\n"
      << "deform_hidden_layers = " << cfg.deform_hidden_layers << "\n"
      << "deform_freqs = " << cfg.deform_freqs << "\n";
}

// --- scene directory ---------------------------------------------------------

namespace {

// Ground-truth splats are persisted so a scene directory fully replays.
void write_gt_splats(const SplatSet& set, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "count " << set.size() << "\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Splat& s = set.splats[i];
    out << "splat " << set.binding[i];
    for (double v : {s.mu.x(), s.mu.y(), s.mu.z(), s.rot.w(), s.rot.x(), s.rot.y(), s.rot.z(),
                     s.log_scale.x(), s.log_scale.y(), s.log_scale.z(), s.color.x(), s.color.y(),
                     s.color.z(), s.opacity_logit}) {
      out << " " << fmt_double(v);
    }
    out << "\n";
  }
}

SplatSet read_gt_splats(const std::string& path) {
  std::ifstream in = open_in(path);
  SplatSet set;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag != "splat") continue;
    Index binding;
    Splat s;
    double qw, qx, qy, qz;
    if (!(ss >> binding >> s.mu.x() >> s.mu.y() >> s.mu.z() >> qw >> qx >> qy >> qz >>
          s.log_scale.x() >> s.log_scale.y() >> s.log_scale.z() >> s.color.x() >> s.color.y() >>
          s.color.z() >> s.opacity_logit)) {
      throw Error(ErrorKind::BadFile, path + ": malformed splat record");
    }
    s.rot = Quat(qw, qx, qy, qz);
    set.splats.push_back(s);
    set.binding.push_back(binding);
  }
  return set;
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu.ppm", i);
  return buf;
}

}  // namespace

void save_scene(const Scene& scene, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "frames");
  const auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  {
    std::ofstream meta = open_out(at("meta.txt"));
    meta << "preset " << scene.preset << "\nseed " << scene.seed << "\nhas_mouth "
         << (scene.has_mouth ? 1 : 0) << "\nbackground ";
    write_vec3(meta, scene.background);
    meta << "\nmouth_parts";
    for (int p : scene.mouth_parts) meta << " " << p;
    meta << "\ngt_mouth_upper_per_jaw ";
    write_vec3(meta, scene.gt_mouth_upper_per_jaw);
    meta << "\ngt_mouth_lower_per_jaw ";
    write_vec3(meta, scene.gt_mouth_lower_per_jaw);
    meta << "\n";
  }
  write_obj(scene.rig.base, at("mesh.obj"));
  write_parts(scene.rig.base, at("parts.txt"), scene.has_mouth ? &scene.aug : nullptr,
              scene.mouth_parts.empty() ? -1 : scene.mouth_parts.front());
  if (scene.has_mouth) {
    write_augmentation(scene.aug, scene.rig.base.num_faces() - scene.aug.new_faces.size(),
                       at("aug.txt"));
  }
  write_camera(scene.camera, at("camera.txt"));
  write_rig(scene.rig, at("rig.txt"));
  write_params_sequence(scene.params, at("params.txt"));
  write_gt_parts(scene.gt_set_of_part, scene.rig.base.part_names, at("gt_parts.txt"));
  write_gt_splats(scene.gt_splats, at("gt_splats.txt"));
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    write_ppm(scene.frames[i], (fs::path(dir) / "frames" / frame_name(i)).string());
  }
}

Scene load_scene(const std::string& dir) {
  const auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  Scene scene;

  {
    std::ifstream meta = open_in(at("meta.txt"));
    std::string line;
    while (std::getline(meta, line)) {
      std::istringstream ss(line);
      std::string tag;
      if (!(ss >> tag)) continue;
      if (tag == "preset") ss >> scene.preset;
      else if (tag == "seed") ss >> scene.seed;
      else if (tag == "has_mouth") {
        int v;
        ss >> v;
        scene.has_mouth = v != 0;
      } else if (tag == "background") {
        scene.background = parse_vec3(ss, "meta.txt");
      } else if (tag == "mouth_parts") {
        int p;
        while (ss >> p) scene.mouth_parts.push_back(p);
      } else if (tag == "gt_mouth_upper_per_jaw") {
        scene.gt_mouth_upper_per_jaw = parse_vec3(ss, "meta.txt");
      } else if (tag == "gt_mouth_lower_per_jaw") {
        scene.gt_mouth_lower_per_jaw = parse_vec3(ss, "meta.txt");
      }
    }
  }

  scene.rig.base = read_obj(at("mesh.obj"));
  read_parts(scene.rig.base, at("parts.txt"));
  if (scene.has_mouth) {
    scene.aug = read_augmentation(scene.rig.base, at("aug.txt"));
  }
  scene.camera = read_camera(at("camera.txt"));
  read_rig(scene.rig, at("rig.txt"));
  scene.params = read_params_sequence(at("params.txt"));
  scene.gt_set_of_part = read_gt_parts(scene.rig.base.part_names, at("gt_parts.txt"));
  scene.gt_splats = read_gt_splats(at("gt_splats.txt"));
  scene.frames.reserve(scene.params.size());
  for (std::size_t i = 0; i < scene.params.size(); ++i) {
    scene.frames.push_back(read_ppm((fs::path(dir) / "frames" / frame_name(i)).string()));
  }
  return scene;
}

}  // namespace gavatar
