#include <gtest/gtest.h>

#include <fstream>

#include "hinpath/hin.hpp"
#include "hinpath/io.hpp"
#include "support.hpp"

namespace hinpath {
namespace {

using testing::dense;
using testing::fixture_dir;
using testing::temp_dir;

void copy_tiny(const std::filesystem::path& dst) {
  std::filesystem::copy(fixture_dir() / "tiny", dst, std::filesystem::copy_options::recursive);
}

void write(const std::filesystem::path& file, const std::string& text) {
  std::ofstream(file, std::ios::binary) << text;
}

template <typename F>
std::string data_error_message(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no DataError";
  return {};
}

TEST(Schema, ParsesDblpFixture) {
  const auto s = SchemaGraph::parse(io::read_file(fixture_dir() / "schemas/dblp.tsv"));
  ASSERT_EQ(s.node_types.size(), 4u);
  EXPECT_EQ(s.edge_types.size(), 6u);
  EXPECT_EQ(s.target_type().name, "author");
  EXPECT_EQ(s.node_types[*s.find_node_type("venue")].feature_dim, 0u);
  EXPECT_EQ(*s.node_type_by_letter('T'), *s.find_node_type("term"));
  EXPECT_EQ(s.num_classes, 4u);
}

TEST(Schema, TextRoundTrip) {
  const auto s = SchemaGraph::parse(io::read_file(fixture_dir() / "schemas/imdb.tsv"));
  const auto again = SchemaGraph::parse(s.to_text());
  EXPECT_EQ(again.to_text(), s.to_text());
}

TEST(Schema, RejectsBadInput) {
  EXPECT_THROW(SchemaGraph::parse("nodetype\ta\t3\t2\tA\n"), DataError);  // no target
  EXPECT_THROW(SchemaGraph::parse("nodetype\ta\t3\t2\tA\nnodetype\tb\t3\t2\tA\ntarget\ta\n"), DataError);
  EXPECT_THROW(SchemaGraph::parse("nodetype\ta\t3\t2\tA\nedgetype\te\ta\tz\ntarget\ta\n"), DataError);
  EXPECT_THROW(SchemaGraph::parse("nodetype\ta\t3\t2\tA\ntarget\ta\nbogus\n"), DataError);
}

TEST(SparseAdjacency, FromEntriesSumsDuplicates) {
  const auto a = SparseAdjacency::from_entries(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 0.5}});
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_DOUBLE_EQ(dense(a)(1, 2), 1.5);
  EXPECT_DOUBLE_EQ(dense(a)(0, 1), 2.0);
}

TEST(SparseAdjacency, ValidatingConstructorRejectsUnsortedColumns) {
  EXPECT_THROW(SparseAdjacency(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), DataError);
  EXPECT_THROW(SparseAdjacency(1, 3, {0, 1}, {3}, {1.0}), DataError);
}

TEST(RowNormalize, UnitWeights) {
  const auto a = row_normalize(SparseAdjacency::from_entries(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}}));
  EXPECT_DOUBLE_EQ(a.values()[0], 0.5);
  EXPECT_DOUBLE_EQ(a.values()[1], 0.5);
}

TEST(RowNormalize, WeightedRow) {
  const auto a = row_normalize(SparseAdjacency::from_entries(1, 2, {{0, 0, 1.0}, {0, 1, 3.0}}));
  EXPECT_DOUBLE_EQ(a.values()[0], 0.25);
  EXPECT_DOUBLE_EQ(a.values()[1], 0.75);
}

TEST(RowNormalize, EmptyRowStaysEmpty) {
  const auto a = row_normalize(SparseAdjacency::from_entries(3, 2, {{0, 1, 2.0}, {2, 0, 4.0}}));
  EXPECT_EQ(a.row_cols(1).size(), 0u);
  EXPECT_DOUBLE_EQ(a.values()[0], 1.0);
  EXPECT_DOUBLE_EQ(a.values()[1], 1.0);
}

TEST(RowNormalize, RejectsNegative) {
  EXPECT_THROW(row_normalize(SparseAdjacency::from_entries(1, 1, {{0, 0, -1.0}})), DataError);
}

TEST(ReverseAdjacency, MatchesDenseTransposeAndInvolutes) {
  RngStream rng(7, RngPurpose::kSynth);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.uniform_below(12), c = 1 + rng.uniform_below(12);
    std::vector<SparseAdjacency::Entry> e;
    for (std::uint32_t i = 0; i < r; ++i)
      for (std::uint32_t j = 0; j < c; ++j)
        if (rng.uniform() < 0.3) e.push_back({i, j, rng.uniform(0.1, 2.0)});
    const auto a = SparseAdjacency::from_entries(r, c, e);
    const auto t = reverse_adjacency(a);
    const auto da = dense(a), dt = dense(t);
    ASSERT_EQ(dt.rows(), c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) EXPECT_EQ(da(i, j), dt(j, i));
    EXPECT_EQ(reverse_adjacency(t), a);
  }
}

TEST(Dataset, LoadsTinyFixture) {
  const auto h = load_dataset(fixture_dir() / "tiny");
  EXPECT_EQ(h.target_count(), 1u);
  EXPECT_EQ(h.labels.classes[0], 1u);
  EXPECT_EQ(h.splits[0], Split::kTrain);
  EXPECT_EQ(h.edge_count(), 4u);
  EXPECT_FLOAT_EQ((*h.features[0])(0, 0), 1.5f);
  EXPECT_FLOAT_EQ((*h.features[1])(1, 1), 1.0f);
}

TEST(Dataset, SaveLoadRoundTripKeepsContentHash) {
  RngStream rng(3, RngPurpose::kSynth);
  const auto h = testing::random_hin(rng);
  const auto dir = temp_dir("roundtrip");
  save_dataset(h, dir);
  const auto back = load_dataset(dir);
  EXPECT_EQ(content_hash(back), content_hash(h));
  EXPECT_EQ(back.adjacency, h.adjacency);
  EXPECT_EQ(*back.features[0], *h.features[0]);
}

TEST(Dataset, LoadsDblpShapedGraph) {
  auto schema = SchemaGraph::parse(io::read_file(fixture_dir() / "schemas/dblp.tsv"));
  const std::size_t sizes[] = {12, 20, 8, 3};
  for (std::size_t t = 0; t < 4; ++t) {
    schema.node_types[t].count = sizes[t];
    if (schema.node_types[t].feature_dim) schema.node_types[t].feature_dim = 3;
  }
  Hin h;
  h.schema = schema;
  RngStream rng(11, RngPurpose::kSynth);
  for (const auto& et : schema.edge_types) {
    std::vector<SparseAdjacency::Entry> e;
    for (std::uint32_t i = 0; i < schema.node_types[et.src].count; ++i)
      e.push_back({i, static_cast<std::uint32_t>(rng.uniform_below(schema.node_types[et.dst].count)), 1.0});
    h.adjacency.push_back(SparseAdjacency::from_entries(schema.node_types[et.src].count,
                                                        schema.node_types[et.dst].count, e));
  }
  for (const auto& nt : schema.node_types) {
    if (nt.feature_dim) {
      h.features.emplace_back(testing::random_matrix<float>(nt.count, nt.feature_dim, rng));
    } else {
      h.features.emplace_back(std::nullopt);
    }
  }
  h.labels.num_classes = 4;
  for (std::size_t i = 0; i < 12; ++i) h.labels.classes.push_back(i % 4);
  h.splits.assign(12, Split::kTrain);
  const auto dir = temp_dir("dblp");
  save_dataset(h, dir);
  const auto back = load_dataset(dir);
  EXPECT_TRUE(back.is_featureless(*back.schema.find_node_type("venue")));
  EXPECT_EQ(back.labels.num_classes, 4u);
  EXPECT_EQ(content_hash(back), content_hash(h));
}

TEST(Dataset, DanglingEdgeNamesFileAndLine) {
  const auto dir = temp_dir("dangling");
  copy_tiny(dir);
  write(dir / "edges/paper_author.tsv", "0\t0\n5\t0\n");
  const auto msg = data_error_message([&] { load_dataset(dir); });
  EXPECT_NE(msg.find("paper_author.tsv:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dangling"), std::string::npos) << msg;
}

TEST(Dataset, DuplicateSplitIsAnError) {
  const auto dir = temp_dir("dupsplit");
  copy_tiny(dir);
  write(dir / "splits.tsv", "0\ttrain\n0\tval\n");
  const auto msg = data_error_message([&] { load_dataset(dir); });
  EXPECT_NE(msg.find("splits.tsv:2"), std::string::npos) << msg;
}

TEST(Dataset, MissingFileIsAnError) {
  const auto dir = temp_dir("missing");
  copy_tiny(dir);
  std::filesystem::remove(dir / "labels.tsv");
  const auto msg = data_error_message([&] { load_dataset(dir); });
  EXPECT_NE(msg.find("labels.tsv"), std::string::npos) << msg;
}

TEST(Dataset, FeatureShapeMismatchIsAnError) {
  const auto dir = temp_dir("shape");
  copy_tiny(dir);
  write(dir / "features/paper.tsv", "1\t0\t3\n0\t1\t3\n");
  const auto msg = data_error_message([&] { load_dataset(dir); });
  EXPECT_NE(msg.find("shape mismatch"), std::string::npos) << msg;
}

TEST(Dataset, NonFiniteFeatureIsAnError) {
  const auto dir = temp_dir("nan");
  copy_tiny(dir);
  write(dir / "features/paper.tsv", "1\t0\nnan\t1\n");
  EXPECT_THROW(load_dataset(dir), DataError);
}

TEST(Hinf, RoundTripAndCorruption) {
  RngStream rng(5, RngPurpose::kSynth);
  const auto m = testing::random_matrix<float>(7, 3, rng);
  const auto bytes = encode_hinf(m);
  EXPECT_EQ(bytes.size(), 12u + 21u * 4u);
  EXPECT_EQ(decode_hinf(bytes, "m"), m);
  EXPECT_THROW(decode_hinf("HINX" + bytes.substr(4), "m"), DataError);
  EXPECT_THROW(decode_hinf(bytes.substr(0, bytes.size() - 1), "m"), DataError);
}

Hin star_graph(std::size_t leaves) {
  Hin h;
  h.schema.node_types = {{"hub", 1, 1, 'H'}, {"leaf", leaves, 1, 'L'}};
  h.schema.edge_types = {{"leaf_hub", 1, 0}};
  h.schema.target = 0;
  std::vector<SparseAdjacency::Entry> e;
  for (std::uint32_t i = 0; i < leaves; ++i) e.push_back({i, 0, 1.0});
  h.adjacency.push_back(SparseAdjacency::from_entries(leaves, 1, e));
  h.features = {FeatureMatrix(1, 1, 1.0f), FeatureMatrix(leaves, 1, 1.0f)};
  h.labels.num_classes = 1;
  h.labels.classes = {0};
  h.splits = {Split::kTrain};
  return h;
}

TEST(Sparsify, CapsStarInDegree) {
  const auto h = star_graph(100);
  const auto s = sparsify_by_in_degree_cap(h, 5, 1);
  EXPECT_EQ(s.adjacency[0].nnz(), 5u);
  EXPECT_EQ(reverse_adjacency(s.adjacency[0]).row_cols(0).size(), 5u);
  const auto again = sparsify_by_in_degree_cap(s, 5, 1);
  EXPECT_EQ(again.adjacency, s.adjacency);
  EXPECT_NE(sparsify_by_in_degree_cap(h, 5, 2).adjacency, s.adjacency);
}

TEST(Sparsify, NoOpWhenUnderCap) {
  RngStream rng(9, RngPurpose::kSynth);
  const auto h = testing::random_hin(rng);
  const auto s = sparsify_by_in_degree_cap(h, 1000, 4);
  EXPECT_EQ(content_hash(s), content_hash(h));
}

TEST(Sparsify, ZeroCapIsUsageError) { EXPECT_THROW(sparsify_by_in_degree_cap(star_graph(3), 0, 1), UsageError); }

Hin with_featureless_venue() {
  auto h = star_graph(40);
  h.features[1].reset();
  h.schema.node_types[1].feature_dim = 0;
  return h;
}

TEST(SynthFeatures, DeterministicPerSeed) {
  const auto h = with_featureless_venue();
  const auto a = synth_features_for_featureless(h, "leaf", 8, 17);
  EXPECT_EQ(a, synth_features_for_featureless(h, "leaf", 8, 17));
  const auto b = synth_features_for_featureless(h, "leaf", 8, 18);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a.data()[i] != b.data()[i];
  EXPECT_GE(static_cast<double>(differ) / a.size(), 0.99);
  for (float v : a.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(SynthFeatures, ZeroDimAndFeaturedTypes) {
  const auto h = with_featureless_venue();
  const auto z = synth_features_for_featureless(h, "leaf", 0, 1);
  EXPECT_EQ(z.rows(), 40u);
  EXPECT_EQ(z.cols(), 0u);
  EXPECT_THROW(synth_features_for_featureless(h, "hub", 4, 1), DataError);
  const auto filled = with_synthesized_features(h, 4, 1);
  EXPECT_FALSE(filled.is_featureless(1));
  EXPECT_NO_THROW(filled.validate());
}

}  // namespace
}  // namespace hinpath
