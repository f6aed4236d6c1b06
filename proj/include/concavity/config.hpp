#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "concavity/geometry.hpp"
#include "concavity/grid.hpp"

namespace clab {

/// Flat key=value text config ('#' comments, blank lines ignored).
class Config {
 public:
  static Config parse(std::istream& is) {
    Config c;
    std::string line;
    while (std::getline(is, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (!key.empty()) c.kv_[key] = val;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    return parse(f);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
  }
  std::string str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }
  double num(const std::string& key) const { return std::stod(str(key)); }
  double num(const std::string& key, double dflt) const {
    return has(key) ? std::stod(str(key)) : dflt;
  }
  int integer(const std::string& key, int dflt) const {
    return has(key) ? std::stoi(str(key)) : dflt;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
  }

  /// Domain description: domain.kind = disk|ellipse|polygon plus parameters.
  ConvexDomain domain() const {
    std::string kind = str("domain.kind", "disk");
    if (kind == "disk") {
      return ConvexDomain::disk({num("domain.cx", 0.0), num("domain.cy", 0.0)},
                                num("domain.radius", 1.0));
    }
    if (kind == "ellipse") {
      return ConvexDomain::ellipse({num("domain.cx", 0.0), num("domain.cy", 0.0)}, num("domain.a"),
                                   num("domain.b"));
    }
    if (kind == "polygon") {
      auto xs = numbers("domain.xs");
      auto ys = numbers("domain.ys");
      if (xs.size() != ys.size()) throw std::runtime_error("domain.xs and domain.ys length mismatch");
      std::vector<Vec2> verts;
      for (size_t i = 0; i < xs.size(); ++i) verts.push_back({xs[i], ys[i]});
      return ConvexDomain::polygon(verts);
    }
    throw std::runtime_error("unknown domain.kind: " + kind);
  }

  /// Grid description; accepts either explicit counts (grid.nx/ny) or a
  /// spacing (grid.h) and a margin around the domain box.
  GridSpec grid(const ConvexDomain& dom) const {
    BBox db = dom.bounding_box();
    double margin = num("grid.margin", 0.0625);
    BBox box{num("grid.xmin", db.xmin - margin), num("grid.xmax", db.xmax + margin),
             num("grid.ymin", db.ymin - margin), num("grid.ymax", db.ymax + margin)};
    if (has("grid.h")) return GridSpec::with_spacing(box, num("grid.h"));
    return GridSpec(integer("grid.nx", 129), integer("grid.ny", 129), box);
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace clab
