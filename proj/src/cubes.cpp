#include "crowdtex/cubes.hpp"

#include <stdexcept>
#include <string>

namespace crowdtex {

CubeGrid extract_cubes(const FrameSequence& seq, const CubeSpec& spec) {
    if (spec.p < 2 || spec.q < 2) {
        throw std::invalid_argument("extract_cubes: p and q must be >= 2");
    }
    if (spec.spatial_stride < 1 || spec.temporal_stride < 1) {
        throw std::invalid_argument("extract_cubes: strides must be >= 1");
    }
    if (spec.p > seq.width || spec.p > seq.height) {
        throw std::invalid_argument("extract_cubes: p=" + std::to_string(spec.p) +
                                    " exceeds frame size " + std::to_string(seq.width) + "x" +
                                    std::to_string(seq.height));
    }
    if (spec.q > seq.frame_count()) {
        throw std::invalid_argument("extract_cubes: q=" + std::to_string(spec.q) +
                                    " exceeds frame count " +
                                    std::to_string(seq.frame_count()));
    }

    CubeGrid grid;
    grid.spec = spec;
    grid.nx = (seq.width - spec.p) / spec.spatial_stride + 1;
    grid.ny = (seq.height - spec.p) / spec.spatial_stride + 1;
    grid.nt = (seq.frame_count() - spec.q) / spec.temporal_stride + 1;
    grid.cubes.reserve(static_cast<std::size_t>(grid.nx) * grid.ny * grid.nt);

    for (int ix = 0; ix < grid.nx; ++ix) {
        for (int iy = 0; iy < grid.ny; ++iy) {
            for (int it = 0; it < grid.nt; ++it) {
                Cube cube;
                cube.x = ix * spec.spatial_stride;
                cube.y = iy * spec.spatial_stride;
                cube.t = it * spec.temporal_stride;
                cube.p = spec.p;
                cube.q = spec.q;
                cube.data.resize(static_cast<std::size_t>(spec.p) * spec.p * spec.q);
                std::size_t idx = 0;
                for (int dt = 0; dt < spec.q; ++dt) {
                    const std::vector<double>& frame =
                        seq.frames[static_cast<std::size_t>(cube.t + dt)];
                    for (int dy = 0; dy < spec.p; ++dy) {
                        const double* row =
                            frame.data() + static_cast<std::size_t>(cube.y + dy) * seq.width +
                            cube.x;
                        for (int dx = 0; dx < spec.p; ++dx) {
                            cube.data[idx++] = row[dx];
                        }
                    }
                }
                grid.cubes.push_back(std::move(cube));
            }
        }
    }
    return grid;
}

} // namespace crowdtex
