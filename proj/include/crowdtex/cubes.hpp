#ifndef CROWDTEX_CUBES_HPP
#define CROWDTEX_CUBES_HPP

#include <vector>

#include "crowdtex/frame_io.hpp"

namespace crowdtex {

// Geometry of the spatio-temporal decomposition: p x p pixels by q frames.
// Default strides equal p and q (non-overlapping tiling).
struct CubeSpec {
    int p = 8;
    int q = 5;
    int spatial_stride = 8;
    int temporal_stride = 5;
};

// One extracted block. data is slice-major: data[(t*p + y)*p + x], so each
// temporal slice is a contiguous p*p row-major image.
struct Cube {
    int x = 0;
    int y = 0;
    int t = 0;
    int p = 0;
    int q = 0;
    std::vector<double> data;

    double at(int dt, int dx, int dy) const {
        return data[(static_cast<std::size_t>(dt) * p + dy) * p + dx];
    }
};

struct CubeGrid {
    CubeSpec spec;
    int nx = 0;
    int ny = 0;
    int nt = 0;
    std::vector<Cube> cubes; // ordered x-major, then y, then t
};

// Tiles the sequence into cubes at origins (i*spatial_stride, j*spatial_stride,
// k*temporal_stride). nx = floor((width-p)/spatial_stride)+1 and analogously
// for ny, nt; partial border blocks are dropped. Cube data is copied.
// Throws std::invalid_argument if the spec is malformed or exceeds the
// sequence extent.
CubeGrid extract_cubes(const FrameSequence& seq, const CubeSpec& spec);

} // namespace crowdtex

#endif
