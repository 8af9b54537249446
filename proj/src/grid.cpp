#include "nlobs/grid.hpp"

#include <algorithm>
#include <string>

#include "nlobs/error.hpp"

namespace nlobs {

std::vector<double> GridSpec::nodes() const {
    std::vector<double> xs(n_points);
    for (std::size_t i = 0; i < n_points; ++i) xs[i] = x(i);
    return xs;
}

std::size_t GridSpec::index_of(double xv) const {
    const double pos = (xv + R_dom) / spacing();
    const auto i = static_cast<long long>(std::llround(pos));
    return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(n_points) - 1));
}

GridSpec GridSpec::refined() const {
    GridSpec g = *this;
    g.n_points = periodic ? 2 * n_points : 2 * n_points - 1;
    g.dt = 0.5 * dt;
    return g;
}

void GridSpec::validate() const {
    if (dim != 1 && dim != 2) throw Error(ErrorKind::parameter, "grid.dim must be 1 or 2");
    if (!(R_dom > 0.0)) throw Error(ErrorKind::parameter, "grid.R_dom must be positive");
    if (n_points < 64) throw Error(ErrorKind::parameter, "grid.n_points must be at least 64");
    if (!(dt > 0.0)) throw Error(ErrorKind::parameter, "grid.dt must be positive");
    if (!(T > dt)) throw Error(ErrorKind::parameter, "grid.T must exceed grid.dt");
}

}  // namespace nlobs
