#include "actslam/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace actslam {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace

void Config::validate() const {
  require(f_r1 > 0 && f_r1 < 1, "f_r1 must be in (0,1)");
  require(f_r2 > 0 && f_r2 < 1, "f_r2 must be in (0,1)");
  require(f_sz > 0, "f_sz must be > 0");
  require(f_sr > 0, "f_sr must be > 0");
  require(f_sc > 0, "f_sc must be > 0");
  require(f_cs >= 3, "f_cs must be >= 3");
  require(f_gr > 0, "f_gr must be > 0");
  require(f_lr > 0, "f_lr must be > 0");
  require(f_lx > 0 && f_ly > 0 && f_lz > 0, "local map extents must be > 0");
  require(f_B > 0, "f_B must be > 0");
  require(mission_budget > 0, "mission_budget must be > 0");
  require(l_hit > 0, "l_hit must be > 0");
  require(l_miss < 0, "l_miss must be < 0");
  require(l_min < 0 && l_max > 0, "log-odds clamp must straddle 0");
  require(p_free > 0 && p_free < p_occ && p_occ < 1, "need 0 < p_free < p_occ < 1");
  require(fov_h_deg > 0 && fov_h_deg < 180, "fov_h_deg must be in (0,180)");
  require(fov_v_deg > 0 && fov_v_deg < 180, "fov_v_deg must be in (0,180)");
  require(n_rays_h > 1 && n_rays_v > 1, "n_rays must be > 1");
  require(ig_rays_h > 1 && ig_rays_v > 1, "ig_rays must be > 1");
  require(n_pos > 0 && n_yaw > 0, "sampling counts must be > 0");
  require(!ring_radii.empty(), "ring_radii must be non-empty");
  for (double r : ring_radii) require(r > 0, "ring radii must be > 0");
  require(sigma_t >= 0 && sigma_psi >= 0 && sigma_det >= 0, "noise stds must be >= 0");
  require(g_da > 0, "g_da must be > 0");
  for (double s : prior_noise) require(s > 0, "prior_noise entries must be > 0");
  for (double s : slc_noise) require(s > 0, "slc_noise entries must be > 0");
  require(key_dist > 0 && key_yaw_deg > 0 && key_det_dist > 0,
          "key-pose thresholds must be > 0");
  require(eps_db > 0, "eps_db must be > 0");
  require(db_min_pts >= 1, "db_min_pts must be >= 1");
  require(tau_slc > 0, "tau_slc must be > 0");
  require(n_yaw_pano > 0, "n_yaw_pano must be > 0");
  require(lm_rel_tol > 0, "lm_rel_tol must be > 0");
  require(lm_max_iters > 0, "lm_max_iters must be > 0");
}

Config Config::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  require(doc.is_object(), "top level must be a JSON object");

  Config cfg;
  // One setter per key; anything not in this table is an unknown key.
  std::map<std::string, std::function<void(const json&)>> setters = {
      {"f_r1", [&](const json& v) { cfg.f_r1 = v.get<double>(); }},
      {"f_r2", [&](const json& v) { cfg.f_r2 = v.get<double>(); }},
      {"f_sz", [&](const json& v) { cfg.f_sz = v.get<double>(); }},
      {"f_sr", [&](const json& v) { cfg.f_sr = v.get<double>(); }},
      {"f_sc", [&](const json& v) { cfg.f_sc = v.get<double>(); }},
      {"f_cs", [&](const json& v) { cfg.f_cs = v.get<int>(); }},
      {"f_gr", [&](const json& v) { cfg.f_gr = v.get<double>(); }},
      {"f_lr", [&](const json& v) { cfg.f_lr = v.get<double>(); }},
      {"f_lx", [&](const json& v) { cfg.f_lx = v.get<double>(); }},
      {"f_ly", [&](const json& v) { cfg.f_ly = v.get<double>(); }},
      {"f_lz", [&](const json& v) { cfg.f_lz = v.get<double>(); }},
      {"f_B", [&](const json& v) { cfg.f_B = v.get<double>(); }},
      {"mission_budget", [&](const json& v) { cfg.mission_budget = v.get<double>(); }},
      {"l_hit", [&](const json& v) { cfg.l_hit = v.get<double>(); }},
      {"l_miss", [&](const json& v) { cfg.l_miss = v.get<double>(); }},
      {"l_min", [&](const json& v) { cfg.l_min = v.get<double>(); }},
      {"l_max", [&](const json& v) { cfg.l_max = v.get<double>(); }},
      {"p_occ", [&](const json& v) { cfg.p_occ = v.get<double>(); }},
      {"p_free", [&](const json& v) { cfg.p_free = v.get<double>(); }},
      {"fov_h_deg", [&](const json& v) { cfg.fov_h_deg = v.get<double>(); }},
      {"fov_v_deg", [&](const json& v) { cfg.fov_v_deg = v.get<double>(); }},
      {"n_rays_h", [&](const json& v) { cfg.n_rays_h = v.get<int>(); }},
      {"n_rays_v", [&](const json& v) { cfg.n_rays_v = v.get<int>(); }},
      {"ig_rays_h", [&](const json& v) { cfg.ig_rays_h = v.get<int>(); }},
      {"ig_rays_v", [&](const json& v) { cfg.ig_rays_v = v.get<int>(); }},
      {"n_pos", [&](const json& v) { cfg.n_pos = v.get<int>(); }},
      {"ring_radii", [&](const json& v) { cfg.ring_radii = v.get<std::vector<double>>(); }},
      {"n_yaw", [&](const json& v) { cfg.n_yaw = v.get<int>(); }},
      {"sigma_t", [&](const json& v) { cfg.sigma_t = v.get<double>(); }},
      {"sigma_psi", [&](const json& v) { cfg.sigma_psi = v.get<double>(); }},
      {"sigma_det", [&](const json& v) { cfg.sigma_det = v.get<double>(); }},
      {"g_da", [&](const json& v) { cfg.g_da = v.get<double>(); }},
      {"prior_noise", [&](const json& v) { cfg.prior_noise = v.get<std::array<double, 4>>(); }},
      {"slc_noise", [&](const json& v) { cfg.slc_noise = v.get<std::array<double, 4>>(); }},
      {"key_dist", [&](const json& v) { cfg.key_dist = v.get<double>(); }},
      {"key_yaw_deg", [&](const json& v) { cfg.key_yaw_deg = v.get<double>(); }},
      {"key_det_dist", [&](const json& v) { cfg.key_det_dist = v.get<double>(); }},
      {"eps_db", [&](const json& v) { cfg.eps_db = v.get<double>(); }},
      {"db_min_pts", [&](const json& v) { cfg.db_min_pts = v.get<int>(); }},
      {"tau_slc", [&](const json& v) { cfg.tau_slc = v.get<double>(); }},
      {"n_yaw_pano", [&](const json& v) { cfg.n_yaw_pano = v.get<int>(); }},
      {"lm_rel_tol", [&](const json& v) { cfg.lm_rel_tol = v.get<double>(); }},
      {"lm_max_iters", [&](const json& v) { cfg.lm_max_iters = v.get<int>(); }},
  };

  for (const auto& [key, value] : doc.items()) {
    auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: bad value for \"" + key + "\": " + e.what());
    }
  }

  cfg.validate();
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace actslam
