#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "cgl/error.hpp"
#include "cgl/geometry.hpp"
#include "cgl/mapping_oracle.hpp"
#include "test_support.hpp"

namespace cgl {
namespace {

using testing::random_clear_box;
using testing::random_grid;
using testing::to_set;

const GridSpec k4x4(4, 4, 400, 400);

TEST(GridCells, FourByFourOf400) {
  auto cells = grid_cells(k4x4);
  ASSERT_EQ(cells.size(), 16u);
  EXPECT_EQ(cells[0].index, 1);
  EXPECT_DOUBLE_EQ(cells[0].x_min, 0);
  EXPECT_DOUBLE_EQ(cells[0].y_min, 0);
  EXPECT_DOUBLE_EQ(cells[0].x_max, 100);
  EXPECT_DOUBLE_EQ(cells[0].y_max, 100);
  EXPECT_EQ(cells[15].index, 16);
  EXPECT_DOUBLE_EQ(cells[15].x_min, 300);
  EXPECT_DOUBLE_EQ(cells[15].y_min, 300);
  EXPECT_DOUBLE_EQ(cells[15].x_max, 400);
  EXPECT_DOUBLE_EQ(cells[15].y_max, 400);
  for (const auto& c : cells) EXPECT_DOUBLE_EQ(c.area(), 100.0 * 100.0);
}

TEST(GridCells, SingleCellIsWholeImage) {
  auto cells = grid_cells(GridSpec(1, 1, 300, 300));
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].x_min, 0);
  EXPECT_EQ(cells[0].y_min, 0);
  EXPECT_EQ(cells[0].x_max, 300);
  EXPECT_EQ(cells[0].y_max, 300);
}

TEST(GridCells, ThreeByThreeAreasSumToImage) {
  auto cells = grid_cells(GridSpec(3, 3, 450, 450));
  ASSERT_EQ(cells.size(), 9u);
  double total = 0;
  for (const auto& c : cells) {
    EXPECT_DOUBLE_EQ(c.x_max - c.x_min, 150);
    EXPECT_DOUBLE_EQ(c.y_max - c.y_min, 150);
    total += c.area();
  }
  EXPECT_DOUBLE_EQ(total, 450.0 * 450.0);
}

TEST(GridCells, RowMajorIndexing) {
  GridSpec g(3, 5, 500, 300);
  for (const auto& c : grid_cells(g)) {
    int r = static_cast<int>(c.y_min / 100 + 0.5), col = static_cast<int>(c.x_min / 100 + 0.5);
    EXPECT_EQ(c.index, r * 5 + col + 1);
  }
}

TEST(GridSpecTest, RejectsZeroDimensions) {
  EXPECT_THROW(GridSpec(0, 4, 400, 400), ArgumentError);
  EXPECT_THROW(GridSpec(4, 0, 400, 400), ArgumentError);
  EXPECT_THROW(GridSpec(4, 4, 0, 400), ArgumentError);
  EXPECT_THROW(GridSpec(4, 4, 400, -1), ArgumentError);
}

TEST(Tiling, AreasSumAndPointsLandInExactlyOneCell) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    GridSpec g = random_grid(gen);
    auto cells = grid_cells(g);
    double total = 0;
    for (const auto& c : cells) total += c.area();
    EXPECT_NEAR(total, g.width() * g.height(), 1e-6 * g.width() * g.height());

    std::uniform_real_distribution<double> ux(0, g.width()), uy(0, g.height());
    for (int k = 0; k < 50; ++k) {
      double x = ux(gen), y = uy(gen);
      int owners = 0, owner = 0;
      for (const auto& c : cells) {
        bool in_x = c.x_min <= x && (x < c.x_max || (c.x_max == g.width() && x == g.width()));
        bool in_y = c.y_min <= y && (y < c.y_max || (c.y_max == g.height() && y == g.height()));
        if (in_x && in_y) {
          ++owners;
          owner = c.index;
        }
      }
      ASSERT_EQ(owners, 1);
      EXPECT_EQ(cell_at(g, x, y), owner);
    }
    // Interior edge points go to the cell whose lower edge they sit on.
    if (g.cols() > 1) EXPECT_EQ(cell_at(g, g.col_edge(1), 0.0), 2);
    EXPECT_EQ(cell_at(g, g.width(), g.height()), g.cell_count());
  }
}

TEST(BoundingBoxTest, ClampsToFrame) {
  auto b = BoundingBox::clamped(-20, -5, 420, 130, 400, 400);
  EXPECT_EQ(b, BoundingBox(0, 0, 400, 130));
  auto outside = BoundingBox::clamped(410, 10, 500, 50, 400, 400);
  EXPECT_TRUE(outside.degenerate());
}

TEST(DetectionTest, Validates) {
  EXPECT_THROW(Detection::make("", 0.5, BoundingBox(0, 0, 1, 1)), ArgumentError);
  EXPECT_THROW(Detection::make("bus", 1.5, BoundingBox(0, 0, 1, 1)), ArgumentError);
  EXPECT_EQ(Detection::make("Bus", 0.5, BoundingBox(0, 0, 1, 1)).label, "bus");
}

// Expected PGNs below were produced by mapping_oracle(step = 1 px) and frozen.
TEST(MapDetections, BusSpanningSixCells) {
  auto oracle = mapping_oracle(BoundingBox(50, 50, 250, 150), k4x4, 1.0);
  EXPECT_EQ(oracle, (std::set<int>{1, 2, 3, 5, 6, 7}));

  std::vector<Detection> dets = {Detection::make("bus", 0.9, BoundingBox(50, 50, 250, 150))};
  auto out = map_detections_to_grids(dets, k4x4, "bus", 0.2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].label, "bus");
  EXPECT_DOUBLE_EQ(out[0].confidence, 0.9);
  EXPECT_EQ(out[0].pgns, (std::vector<int>{1, 2, 3, 5, 6, 7}));
}

TEST(MapDetections, FullCoverHitsEveryCell) {
  std::vector<Detection> dets = {Detection::make("car", 0.5, BoundingBox(0, 0, 400, 400))};
  auto out = map_detections_to_grids(dets, k4x4, "car", 0.2);
  ASSERT_EQ(out.size(), 1u);
  std::vector<int> all(16);
  for (int i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i + 1;
  EXPECT_EQ(out[0].pgns, all);
}

TEST(MapDetections, CornerModeUndercountsWideBox) {
  BoundingBox wide(10, 10, 390, 40);
  EXPECT_EQ(mapping_oracle(wide, k4x4, 1.0), (std::set<int>{1, 2, 3, 4}));
  std::vector<Detection> dets = {Detection::make("bus", 0.9, wide)};
  EXPECT_EQ(map_detections_to_grids(dets, k4x4, "bus", 0.2, MappingMode::corner())[0].pgns,
            (std::vector<int>{1, 4}));
  EXPECT_EQ(map_detections_to_grids(dets, k4x4, "bus", 0.2, MappingMode::intersection())[0].pgns,
            (std::vector<int>{1, 2, 3, 4}));
}

TEST(MapDetections, EmptyInput) {
  EXPECT_TRUE(map_detections_to_grids({}, k4x4, "bus", 0.2).empty());
}

TEST(MapDetections, FiltersLabelAndThreshold) {
  std::vector<Detection> dets = {
      Detection::make("bus", 0.19, BoundingBox(0, 0, 50, 50)),
      Detection::make("car", 0.9, BoundingBox(0, 0, 50, 50)),
      Detection::make("bus", 0.2, BoundingBox(310, 310, 350, 350)),
  };
  auto out = map_detections_to_grids(dets, k4x4, "bus", 0.2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pgns, std::vector<int>{16});
}

TEST(MapDetections, DropsBoxesThatHitNothing) {
  // Box with no corner strictly inside any cell: all four corners on grid lines.
  std::vector<Detection> dets = {Detection::make("bus", 0.9, BoundingBox(100, 100, 200, 200))};
  EXPECT_TRUE(map_detections_to_grids(dets, k4x4, "bus", 0.2, MappingMode::corner()).empty());
  EXPECT_EQ(map_detections_to_grids(dets, k4x4, "bus", 0.2)[0].pgns, std::vector<int>{6});
}

TEST(MapDetections, ArgumentErrors) {
  EXPECT_THROW(map_detections_to_grids({}, k4x4, "", 0.2), ArgumentError);
  EXPECT_THROW(MappingMode::parse("centroid"), ConfigError);
  EXPECT_THROW(MappingMode::parse("coverage:1.5"), ConfigError);
  EXPECT_THROW(MappingMode::parse("coverage:abc"), ConfigError);
  EXPECT_EQ(MappingMode::parse("coverage:0.25"), MappingMode::coverage(0.25));
  EXPECT_EQ(MappingMode::parse(MappingMode::coverage(0.25).to_string()), MappingMode::coverage(0.25));
}

TEST(MapDetections, CoverageMode) {
  // Box covers all of cell 1 and a quarter of cell 2.
  BoundingBox b(0, 0, 125, 100);
  EXPECT_EQ(box_to_pgns(b, k4x4, MappingMode::coverage(0.25)), (std::vector<int>{1, 2}));
  EXPECT_EQ(box_to_pgns(b, k4x4, MappingMode::coverage(0.26)), (std::vector<int>{1}));
  EXPECT_EQ(box_to_pgns(b, k4x4, MappingMode::coverage(1.0)), (std::vector<int>{1}));
}

TEST(MappingOracleTest, Examples) {
  EXPECT_EQ(mapping_oracle(BoundingBox(0, 0, 100, 100), k4x4, 1.0), std::set<int>{1});
  auto degenerate = BoundingBox::clamped(450, 0, 500, 100, 400, 400);
  EXPECT_TRUE(mapping_oracle(degenerate, k4x4, 1.0).empty());
  EXPECT_THROW(mapping_oracle(BoundingBox(0, 0, 10, 10), k4x4, 30.0), ArgumentError);
}

TEST(Properties, IntersectionMatchesOracle) {
  std::mt19937_64 gen(20240601);
  for (int i = 0; i < 2000; ++i) {
    GridSpec g = random_grid(gen);
    BoundingBox b = random_clear_box(gen, g);
    ASSERT_EQ(to_set(box_to_pgns(b, g, MappingMode::intersection())), mapping_oracle(b, g, 1.0))
        << "grid " << g.rows() << "x" << g.cols() << " box " << b.x_min() << "," << b.y_min() << " " << b.x_max()
        << "," << b.y_max();
  }
}

TEST(Properties, ModeMonotonicity) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> tau(0.01, 1.0);
  for (int i = 0; i < 3000; ++i) {
    GridSpec g = random_grid(gen);
    BoundingBox b = random_clear_box(gen, g);
    auto inter = to_set(box_to_pgns(b, g, MappingMode::intersection()));
    auto corner = to_set(box_to_pgns(b, g, MappingMode::corner()));
    EXPECT_TRUE(std::includes(inter.begin(), inter.end(), corner.begin(), corner.end()));
    double t1 = tau(gen), t2 = tau(gen);
    if (t1 > t2) std::swap(t1, t2);
    auto lo = to_set(box_to_pgns(b, g, MappingMode::coverage(t1)));
    auto hi = to_set(box_to_pgns(b, g, MappingMode::coverage(t2)));
    EXPECT_TRUE(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
    EXPECT_TRUE(std::includes(inter.begin(), inter.end(), lo.begin(), lo.end()));
  }
}

TEST(Properties, RaisingThresholdNeverAdds) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    GridSpec g = random_grid(gen);
    std::vector<Detection> dets;
    for (int k = 0; k < 6; ++k)
      dets.push_back(Detection::make(u(gen) < 0.7 ? "bus" : "car", u(gen), random_clear_box(gen, g)));
    double t1 = u(gen), t2 = u(gen);
    if (t1 > t2) std::swap(t1, t2);
    auto lo = map_detections_to_grids(dets, g, "bus", t1);
    auto hi = map_detections_to_grids(dets, g, "bus", t2);
    EXPECT_LE(hi.size(), lo.size());
    auto ulo = to_set(union_pgns(lo)), uhi = to_set(union_pgns(hi));
    EXPECT_TRUE(std::includes(ulo.begin(), ulo.end(), uhi.begin(), uhi.end()));
  }
}

TEST(Properties, ShiftByOneCellShiftsColumns) {
  std::mt19937_64 gen(11);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    GridSpec g = random_grid(gen);
    if (g.cols() < 2) continue;
    BoundingBox b = random_clear_box(gen, g);
    BoundingBox moved = b.translated(g.cell_width(), 0);
    if (moved.x_max() > g.width()) continue;
    auto before = box_to_pgns(b, g, MappingMode::intersection());
    auto after = box_to_pgns(moved, g, MappingMode::intersection());
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      int r0 = (before[i] - 1) / g.cols(), c0 = (before[i] - 1) % g.cols();
      int r1 = (after[i] - 1) / g.cols(), c1 = (after[i] - 1) % g.cols();
      EXPECT_EQ(r0, r1);
      EXPECT_EQ(c1, c0 + 1);
    }
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(Serialize, EmptyArray) { EXPECT_EQ(serialize_mappings({}), "[]"); }

TEST(Serialize, SingleMappingExactText) {
  std::vector<GridMapping> m = {{"bus", 0.912, {1, 2}}};
  EXPECT_EQ(serialize_mappings(m), R"([{"class":"bus","confidence":0.912,"pgns":[1,2]}])");
}

TEST(Serialize, ThreeDecimalsAndOrder) {
  std::vector<GridMapping> m = {{"traffic light", 0.5, {3}}, {"bus", 1.0, {1, 2, 16}}};
  EXPECT_EQ(serialize_mappings(m),
            R"([{"class":"traffic light","confidence":0.500,"pgns":[3]},)"
            R"({"class":"bus","confidence":1.000,"pgns":[1,2,16]}])");
}

TEST(Serialize, RoundTripProperty) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> conf(0, 1000), n(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GridMapping> ms;
    for (int k = n(gen); k > 0; --k) {
      std::set<int> cells;
      for (int j = n(gen) + 1; j > 0; --j) cells.insert(std::uniform_int_distribution<int>(1, 16)(gen));
      ms.push_back({k % 2 ? "bus" : "fire \"hydrant\"", conf(gen) / 1000.0, {cells.begin(), cells.end()}});
    }
    std::string text = serialize_mappings(ms);
    auto back = parse_mappings(text);
    ASSERT_EQ(back.size(), ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
      EXPECT_EQ(back[i].label, ms[i].label);
      EXPECT_NEAR(back[i].confidence, ms[i].confidence, 1e-12);
      EXPECT_EQ(back[i].pgns, ms[i].pgns);
    }
    EXPECT_EQ(serialize_mappings(back), text);
  }
}

TEST(Serialize, ParseRejectsMalformed) {
  EXPECT_THROW(parse_mappings("{"), ParseError);
  EXPECT_THROW(parse_mappings("{}"), ParseError);
  EXPECT_THROW(parse_mappings(R"([{"class":"bus","confidence":0.5,"pgns":[2,1]}])"), ParseError);
}

}  // namespace
}  // namespace cgl
