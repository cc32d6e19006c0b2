#include "adl/fitlab.hpp"

#include <array>

namespace adl {

namespace {

// Synthetic frontal face on a 64 x 64 heatmap grid, 300W ordering.
// Contour: lower half-ellipse centered (32, 28), radii (22, 24). Inter-ocular
// distance (36 -> 45) is 29 px. Not derived from any dataset sample.
constexpr std::array<Vec2, 68> kTemplate68 = {{
    {10.6839, 22.0623}, {10.0055, 27.4624}, {10.4616, 32.8903}, {12.0285, 38.0659},  // contour
    {14.6255, 42.7224}, {18.1187, 46.6194}, {22.3279, 49.5562}, {27.0359, 51.3811},
    {32.0000, 52.0000}, {36.9641, 51.3811}, {41.6721, 49.5562}, {45.8813, 46.6194},
    {49.3745, 42.7224}, {51.9715, 38.0659}, {53.5384, 32.8903}, {53.9945, 27.4624},
    {53.3161, 22.0623},
    {13.5000, 17.4202}, {17.0000, 15.7202}, {20.5000, 15.3000}, {24.0000, 15.7202},  // eyebrows
    {27.5000, 16.8202}, {36.5000, 16.8202}, {40.0000, 15.7202}, {43.5000, 15.3000},
    {47.0000, 15.7202}, {50.5000, 17.4202},
    {32.0000, 22.0000}, {32.1000, 25.6000}, {31.9000, 29.1000}, {32.0000, 32.7000},  // nose
    {27.6000, 35.6000}, {29.7000, 36.7000}, {32.0000, 37.3000}, {34.3000, 36.7000},
    {36.4000, 35.6000},
    {17.5000, 23.2000}, {20.4000, 21.6000}, {23.6000, 21.7000}, {26.5000, 23.4000},  // eyes
    {23.5000, 24.6000}, {20.4000, 24.5000}, {37.5000, 23.4000}, {40.4000, 21.7000},
    {43.6000, 21.6000}, {46.5000, 23.2000}, {43.6000, 24.5000}, {40.5000, 24.6000},
    {24.5000, 44.6000}, {26.9000, 42.4000}, {29.8000, 41.3000}, {32.0000, 41.9000},  // outer lip
    {34.2000, 41.3000}, {37.1000, 42.4000}, {39.5000, 44.6000}, {37.3000, 47.4000},
    {34.6000, 48.9000}, {32.0000, 49.2000}, {29.4000, 48.9000}, {26.7000, 47.4000},
    {25.9000, 44.7000}, {29.2000, 43.7000}, {32.0000, 43.9000}, {34.8000, 43.7000},  // inner lip
    {38.1000, 44.7000}, {34.8000, 46.2000}, {32.0000, 46.5000}, {29.2000, 46.2000},
}};

}  // namespace

PointSet face_template_68() {
  return PointSet(std::vector<Vec2>(kTemplate68.begin(), kTemplate68.end()), CoordUnit::heatmap_px);
}

}  // namespace adl
