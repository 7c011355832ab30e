#pragma once

#include <map>
#include <string>
#include <vector>

#include "gavatar/geometry.hpp"
#include "gavatar/mouth.hpp"
#include "gavatar/rig.hpp"
#include "gavatar/train.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

// Doubles are printed with 17 significant digits so text round trips are
// value-exact.
std::string fmt_double(double v);

// --- OBJ subset: v/f records, 1-based indices ------------------------------

void write_obj(const TriMesh& mesh, const std::string& path);
// Reads geometry only; parts come from the sidecar.
TriMesh read_obj(const std::string& path);

// --- part mask sidecar ------------------------------------------------------
// One line per part: "part <name>[:<label>] <face ids...>". Labels split a
// part into named face groups (the mouth part uses upper/lower) without
// breaking the one-part-per-face partition.
void write_parts(const TriMesh& mesh, const std::string& path,
                 const MouthAugmentation* aug = nullptr, int mouth_part = -1);
void read_parts(TriMesh& mesh, const std::string& path);

// --- ring sidecar: "ring upper <ids...>" / "ring lower <ids...>" ------------
struct RingSpec {
  std::vector<Index> upper;
  std::vector<Index> lower;
};
void write_rings(const RingSpec& rings, const std::string& path);
RingSpec read_rings(const std::string& path);

// --- augmentation sidecar ----------------------------------------------------
void write_augmentation(const MouthAugmentation& aug, std::size_t base_faces,
                        const std::string& path);
MouthAugmentation read_augmentation(const TriMesh& augmented_mesh, const std::string& path);

// --- camera / rig / params / assignment --------------------------------------
void write_camera(const Camera& cam, const std::string& path);
Camera read_camera(const std::string& path);

void write_rig(const BlendRig& rig, const std::string& path);
// The mesh is stored separately (mesh.obj + parts.txt); this restores the rest.
void read_rig(BlendRig& rig, const std::string& path);

void write_params_sequence(const std::vector<RigParams>& seq, const std::string& path);
std::vector<RigParams> read_params_sequence(const std::string& path);

void write_gt_parts(const std::vector<FaceSet>& set_of_part,
                    const std::vector<std::string>& names, const std::string& path);
std::vector<FaceSet> read_gt_parts(const std::vector<std::string>& names, const std::string& path);

// --- key=value config --------------------------------------------------------
std::map<std::string, std::string> read_kv_file(const std::string& path);
TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv,
                                 TrainConfig base = {});
void write_train_config(const TrainConfig& cfg, const std::string& path);

SceneSpec scene_spec_from_kv(const std::map<std::string, std::string>& kv, SceneSpec base = {});

// --- scene directory ---------------------------------------------------------
void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& dir);

}  // namespace gavatar
