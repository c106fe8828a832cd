#include "ymlab/perturbation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ym {

Profile profileFromName(const std::string& s) {
  if (s == "re_trace") return Profile::ReTrace;
  if (s == "re_trace_sq") return Profile::ReTraceSq;
  throw std::invalid_argument("unknown profile: " + s);
}

LatticeLoop cycleX(const TorusGrid& g, int row, double weight, Profile p, int winding) {
  LatticeLoop l;
  l.weight = weight;
  l.profile = p;
  l.winding = winding;
  for (int x = 0; x < g.nx; ++x) l.sites.push_back(g.idx(x, ((row % g.ny) + g.ny) % g.ny));
  return l;
}

LatticeLoop cycleY(const TorusGrid& g, int col, double weight, Profile p, int winding) {
  LatticeLoop l;
  l.weight = weight;
  l.profile = p;
  l.winding = winding;
  for (int y = 0; y < g.ny; ++y) l.sites.push_back(g.idx(((col % g.nx) + g.nx) % g.nx, y));
  return l;
}

LatticeLoop rectangleLoop(const TorusGrid& g, int x0, int y0, int w, int h, double weight,
                          Profile p, int winding) {
  if (w <= 0 || h <= 0 || w >= g.nx || h >= g.ny)
    throw std::invalid_argument("rectangleLoop: bad extent");
  LatticeLoop l;
  l.weight = weight;
  l.profile = p;
  l.winding = winding;
  auto push = [&](int x, int y) { l.sites.push_back(g.idx((x + g.nx) % g.nx, (y + g.ny) % g.ny)); };
  for (int x = 0; x < w; ++x) push(x0 + x, y0);
  for (int y = 0; y < h; ++y) push(x0 + w, y0 + y);
  for (int x = w; x > 0; --x) push(x0 + x, y0 + h);
  for (int y = h; y > 0; --y) push(x0, y0 + y);
  return l;
}

std::vector<CompiledLoop> compileLoops(const TorusGrid& g, const PerturbationSpec& pert) {
  std::vector<CompiledLoop> out;
  out.reserve(pert.loops.size());
  for (const auto& loop : pert.loops) {
    if (loop.sites.size() < 2 && loop.winding == 0)
      throw std::invalid_argument("loop needs at least two sites or a t-winding");
    CompiledLoop cl;
    cl.basepoint = loop.sites.empty() ? 0 : loop.sites.front();
    cl.winding = loop.winding;
    cl.cweight = pert.amplitude * loop.weight;
    cl.profile = loop.profile;
    const int m = static_cast<int>(loop.sites.size());
    for (int j = 0; j < m; ++j) {
      const int z = loop.sites[j];
      const int zn = loop.sites[(j + 1) % m];
      if (z < 0 || z >= g.sites()) throw std::invalid_argument("loop site out of range");
      EdgeRef e;
      if (zn == g.ixp[z]) {
        e = {z, 0, 1.0, g.hx};
      } else if (zn == g.ixm[z]) {
        e = {zn, 0, -1.0, g.hx};
      } else if (zn == g.iyp[z]) {
        e = {z, 1, 1.0, g.hy};
      } else if (zn == g.iym[z]) {
        e = {zn, 1, -1.0, g.hy};
      } else {
        std::ostringstream os;
        os << "loop is not a closed lattice path: sites " << z << " -> " << zn;
        throw std::invalid_argument(os.str());
      }
      cl.edges.push_back(e);
    }
    out.push_back(std::move(cl));
  }
  return out;
}

PertSupport perturbationSupport(const TorusGrid& g, const PerturbationSpec& pert) {
  PertSupport s;
  if (pert.empty()) return s;
  std::set<std::pair<int, int>> a;
  std::set<int> o;
  for (const auto& lp : compileLoops(g, pert)) {
    for (const auto& e : lp.edges) a.insert({e.comp, e.site});
    if (lp.winding != 0) o.insert(lp.basepoint);
  }
  s.aDofs.assign(a.begin(), a.end());
  s.omegaSites.assign(o.begin(), o.end());
  return s;
}

std::uint64_t perturbationHash(const PerturbationSpec& pert) {
  std::ostringstream os;
  os.precision(17);
  os << pert.amplitude << ";";
  for (const auto& l : pert.loops) {
    for (int z : l.sites) os << z << ",";
    os << "|w" << l.winding << "|c" << l.weight << "|p" << profileName(l.profile) << ";";
  }
  return fnv1a(os.str());
}

}  // namespace ym
