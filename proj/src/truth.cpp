#include "operon/truth.hpp"

#include <cmath>

#include "operon/rng.hpp"

namespace operon {

NodalField make_truth_field(const Mesh& mesh, std::uint64_t seed) {
    // draws, in order: per bump (center_x, center_y, width jitter, amplitude jitter)
    Rng rng(seed ^ 0x7472757468763101ULL);  // generator-version tag mixed into the stream

    struct Bump {
        double cx, cy, s, amp;
    };
    Bump bumps[2];
    for (int k = 0; k < 2; ++k) {
        bumps[k].cx = (0.25 + 0.5 * rng.uniform()) * mesh.L1;
        bumps[k].cy = (0.25 + 0.5 * rng.uniform()) * mesh.L2;
        bumps[k].s = 0.16 * std::min(mesh.L1, mesh.L2) * (1.0 + 0.25 * rng.uniform());
        bumps[k].amp = (k == 0 ? 1.0 : -1.0) * (0.8 + 0.2 * rng.uniform());
    }

    NodalField w;
    w.components = 1;
    w.values.resize(mesh.node_count());
    for (int n = 0; n < mesh.node_count(); ++n) {
        const double x = mesh.nodes[n][0];
        const double y = mesh.nodes[n][1];
        double v = 0.0;
        for (const Bump& b : bumps) {
            const double dx = x - b.cx;
            const double dy = y - b.cy;
            v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.s * b.s));
        }
        w.values[n] = v;
    }
    return w;
}

} // namespace operon
