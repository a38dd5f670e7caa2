#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kriggraph/dataset.hpp"
#include "kriggraph/synth.hpp"

using namespace kriggraph;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kriggraph_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Dataset, SaveLoadRoundTripIsExact) {
  SynthConfig cfg;
  cfg.n_nodes = 12;
  cfg.t_total = 30;
  cfg.region = 4.0;
  auto s = generate(cfg);
  Dataset d{s.series, s.distances, s.xs, s.ys};
  auto dir = fresh_dir("roundtrip");
  save_dataset(dir, d);
  auto back = load_dataset(dir);
  EXPECT_EQ(back.series.values, d.series.values);
  EXPECT_EQ(back.series.node_ids, d.series.node_ids);
  EXPECT_EQ(back.series.timestamps, d.series.timestamps);
  EXPECT_EQ(back.distances, d.distances);
  EXPECT_EQ(back.xs, d.xs);
  EXPECT_EQ(dataset_graph(back, cfg.kernel_sigma, cfg.threshold), s.graph);
}

TEST(Dataset, CoordinatesOnlyGiveEuclideanDistances) {
  auto dir = fresh_dir("coords");
  write(dir / "nodes.csv", "node_id,x,y\na,0,0\nb,3,4\n");
  write(dir / "series.csv", "node_id,t0,t1\nb,1,2\na,3,4\n");
  auto d = load_dataset(dir);
  ASSERT_EQ(d.series.node_ids[0], "b");
  EXPECT_EQ(d.xs[0], 3.0);
  EXPECT_EQ(d.distances(0, 1), 5.0);
  EXPECT_EQ(d.series.values(1, 0), 3.0);
}

TEST(Dataset, UnlistedPairsAreUnreachable) {
  auto dir = fresh_dir("pairs");
  write(dir / "series.csv", "node_id,t0\na,1\nb,2\nc,3\n");
  write(dir / "distances.csv", "i,j,dist\na,b,1.5\n");
  auto d = load_dataset(dir);
  EXPECT_EQ(d.distances(1, 0), 1.5);
  EXPECT_TRUE(std::isinf(d.distances(0, 2)));
  EXPECT_EQ(d.distances(2, 2), 0.0);
  auto g = dataset_graph(d, 1.0, 0.1);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(Dataset, MalformedInputsRejected) {
  auto dir = fresh_dir("bad");
  write(dir / "series.csv", "node_id,t0\na,1\n");
  EXPECT_THROW(load_dataset(dir), ValidationError);  // no distances or coordinates
  write(dir / "distances.csv", "i,j,dist\na,z,1\n");
  EXPECT_THROW(load_dataset(dir), ValidationError);  // unknown node
  write(dir / "distances.csv", "i,j,dist\na,a,x\n");
  EXPECT_THROW(load_dataset(dir), ValidationError);  // bad number
  write(dir / "distances.csv", "i,j,dist\n");
  write(dir / "series.csv", "node_id,t0,t1\na,1\n");
  EXPECT_THROW(load_dataset(dir), ValidationError);  // ragged row
  write(dir / "series.csv", "node_id,t0\na,1\na,2\n");
  EXPECT_THROW(load_dataset(dir), ValidationError);  // duplicate node
  EXPECT_THROW(load_dataset(dir / "missing"), ValidationError);
}
