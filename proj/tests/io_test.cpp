#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "runcsp/io.hpp"
#include "runcsp/rng.hpp"

using namespace runcsp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("runcsp_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Instance parse_cnf(const std::string& text) {
  std::istringstream in(text);
  return io::parse_dimacs_cnf(in);
}

Instance parse_edges(const std::string& text, io::EdgeFormat f, std::vector<std::string>* w = nullptr) {
  std::istringstream in(text);
  return io::parse_edge_list(in, f, w);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("DIMACS clauses map onto the 2-SAT relations") {
  auto f = parse_cnf("c comment\np cnf 3 4\n-1 -2 0\n1 2 0\n-1 3 0\n2 -3 0\n");
  CHECK(f.num_vars() == 3);
  REQUIRE(f.num_constraints() == 4);
  CHECK(f.constraints()[0] == Constraint{0, 1, max2sat::kR00});
  CHECK(f.constraints()[1] == Constraint{0, 1, max2sat::kR11});
  CHECK(f.constraints()[2] == Constraint{0, 2, max2sat::kR01});
  CHECK(f.constraints()[3] == Constraint{2, 1, max2sat::kR01});
  // Semantics: the clause (2 | !3) holds exactly when !(x3 & !x2).
  testing::for_each_assignment(3, 2, [&](const std::vector<int>& a) {
    const bool x1 = a[0], x2 = a[1], x3 = a[2];
    const std::size_t expect = (!x1 || !x2) + (x1 || x2) + (!x1 || x3) + (x2 || !x3);
    CHECK(count_satisfied(f, a) == expect);
  });
}

TEST_CASE("DIMACS clauses may span lines") {
  auto f = parse_cnf("p cnf 2 2\n1\n-2 0 -1 2\n0\n");
  CHECK(f.num_constraints() == 2);
}

TEST_CASE("DIMACS errors") {
  CHECK_THROWS_AS(parse_cnf("1 2 0\n"), io::ParseError);
  CHECK_THROWS_AS(parse_cnf("p cnf 2 1\n1 2 3 0\n"), io::ParseError);
  CHECK_THROWS_AS(parse_cnf("p cnf 2 1\n1 3 0\n"), io::ParseError);
  CHECK_THROWS_AS(parse_cnf("p cnf 2 1\n1 x 0\n"), io::ParseError);
  CHECK_THROWS_AS(parse_cnf("p cnf 2 2\n1 2 0\n"), io::ParseError);
  CHECK_THROWS_AS(parse_cnf("p cnf 2 1\n1 -1 0\n"), io::ParseError);
  try {
    parse_cnf("p cnf 2 1\n\n1 2 2 0\n");
  } catch (const io::ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("DIMACS round trip") {
  auto f = testing::random_instance(builtin_language(Problem::Max2Sat), 20, 50, 1);
  std::ostringstream out;
  io::write_dimacs_cnf(out, f);
  auto g = parse_cnf(out.str());
  CHECK(g.num_vars() == 20);
  testing::for_each_assignment(20, 2, [&](const std::vector<int>& a) {
    // Spot check a slice of the assignment space.
    if (a[0] + a[1] + a[2] == 0) CHECK(count_satisfied(f, a) == count_satisfied(g, a));
  });
}

TEST_CASE("Gset edge lists") {
  std::vector<std::string> warn;
  auto g = parse_edges("4 3\n1 2 1\n2 3 -1\n3 4 1\n", io::EdgeFormat::Gset, &warn);
  CHECK(g.num_vars() == 4);
  CHECK(g.constraints() == std::vector<Constraint>{{0, 1, 0}, {1, 2, 0}, {2, 3, 0}});
  CHECK(warn.size() == 1);
  CHECK_THROWS_AS(parse_edges("3 1\n1 2 2\n", io::EdgeFormat::Gset), io::ParseError);
  CHECK_THROWS_AS(parse_edges("3 2\n1 2 1\n", io::EdgeFormat::Gset), io::ParseError);
  CHECK_THROWS_AS(parse_edges("3 1\n1 4 1\n", io::EdgeFormat::Gset), io::ParseError);
  CHECK_THROWS_AS(parse_edges("3 1\n2 2 1\n", io::EdgeFormat::Gset), io::ParseError);
}

TEST_CASE("simple edge lists") {
  std::vector<std::string> warn;
  auto g = parse_edges("# nodes 6\n0 1\n1 2\n1 0\n", io::EdgeFormat::Simple, &warn);
  CHECK(g.num_vars() == 6);
  CHECK(g.num_constraints() == 3);
  CHECK(warn.size() == 1);
  CHECK(parse_edges("0 4\n", io::EdgeFormat::Simple).num_vars() == 5);
  auto c = testing::cycle(7);
  std::ostringstream out;
  io::write_edge_list(out, c);
  CHECK(parse_edges(out.str(), io::EdgeFormat::Simple) == c);
  auto isolated = Instance(9, {{0, 1, 0}}, builtin_language(Problem::MaxCut));
  std::ostringstream out2;
  io::write_edge_list(out2, isolated);
  CHECK(parse_edges(out2.str(), io::EdgeFormat::Simple).num_vars() == 9);
}

TEST_CASE("read_instance picks the parser from the file") {
  auto dir = scratch("read");
  std::ofstream(dir / "f.cnf") << "p cnf 2 1\n1 2 0\n";
  std::ofstream(dir / "g.txt") << "3 2\n1 2 1\n2 3 1\n";
  std::ofstream(dir / "e.edges") << "0 1\n1 2\n";
  CHECK(io::read_instance(dir / "f.cnf").language() == *builtin_language(Problem::Max2Sat));
  CHECK(io::read_instance(dir / "g.txt").num_constraints() == 2);
  auto e = io::read_instance(dir / "e.edges", builtin_language(Problem::ThreeCol));
  CHECK(e.domain_size() == 3);
  CHECK_THROWS_AS(io::read_instance(dir / "missing.edges"), io::ParseError);
}

TEST_CASE("language names") {
  CHECK(*io::language_by_name("maxcut") == *builtin_language(Problem::MaxCut));
  CHECK(*io::language_by_name("3col") == *builtin_language(Problem::ThreeCol));
  CHECK(io::language_by_name("kcol:5")->domain_size() == 5);
  CHECK_THROWS(io::language_by_name("bogus"));
}

TEST_CASE("assignment output") {
  std::ostringstream out;
  io::write_assignment(out, {1, 0, 2}, "satisfied 3/4");
  CHECK(out.str() == "0 1\n1 0\n2 2\n# satisfied 3/4\n");
}

TEST_CASE("model files round-trip bit-exactly") {
  io::ModelFile m;
  m.config.language = builtin_language(Problem::Max2Sat);
  m.config.state_size = 5;
  m.config.kappa = 0.1;
  m.params = init_params(m.config, 3);
  m.params.at(0).values()[0] = 0.1 + 0.2;  // not representable as a short decimal
  m.train_config = io::train_config_to_json(TrainConfig{});
  m.provenance = {{"seed", 3}};
  const std::string bytes = io::serialize_model(m);
  CHECK(bytes.substr(0, 8) == "RUNCSPM1");
  auto back = io::deserialize_model(bytes);
  CHECK(back.params == m.params);
  CHECK(*back.config.language == *m.config.language);
  CHECK(back.config.state_size == 5);
  CHECK(back.config.kappa == 0.1);
  CHECK(back.train_config == m.train_config);
  CHECK(io::serialize_model(back) == bytes);

  auto dir = scratch("model");
  io::save_model(dir / "m.bin", m);
  CHECK(io::load_model(dir / "m.bin").params == m.params);
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);

  CHECK_THROWS_AS(io::deserialize_model("garbage"), io::ParseError);
  CHECK_THROWS_AS(io::deserialize_model(bytes.substr(0, bytes.size() - 3)), io::ParseError);
  CHECK_THROWS_AS(io::deserialize_model(bytes + "x"), io::ParseError);
}

TEST_CASE("custom languages survive serialization") {
  auto lang = coloring_language(4);
  CHECK(*io::language_from_json(io::language_to_json(*lang)) == *lang);
}

TEST_CASE("generator specs round-trip") {
  const GenSpec specs[] = {gen::ER{10, 20}, gen::Regular{10, 3}, gen::Geometric{10, 0.3},
                           gen::PowerlawCluster{10, 2, 0.4}, gen::Caveman{3, 4}, gen::Cnf2{5, 7},
                           gen::Hard3Col{20}, gen::RbIs{5, 4, 0.2, true}};
  for (const auto& s : specs) {
    auto j = io::spec_to_json(s);
    CHECK(io::spec_to_json(io::spec_from_json(j)) == j);
    CHECK(j["kind"] == spec_kind(s));
  }
  CHECK_THROWS_AS(io::spec_from_json({{"kind", "nope"}}), io::ParseError);
}

TEST_CASE("generation plans expand into concrete entries") {
  auto plan = nlohmann::json::parse(R"({"seed": 3, "families": [
      {"kind": "er", "n": 20, "m": [10, 40], "count": 50},
      {"kind": "geometric", "n": 10, "radius": [0.1, 0.3]}]})");
  auto m = io::manifest_from_plan(plan);
  REQUIRE(m.entries.size() == 51);
  CHECK(m.language == "maxcut");
  int lo = 100, hi = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& er = std::get<gen::ER>(m.entries[i].spec);
    CHECK(er.n == 20);
    lo = std::min(lo, er.m);
    hi = std::max(hi, er.m);
    CHECK(m.entries[i].seed == derive_seed(3, {i}));
  }
  CHECK(lo >= 10);
  CHECK(hi <= 40);
  CHECK(hi - lo > 15);
  const double r = std::get<gen::Geometric>(m.entries[50].spec).radius;
  CHECK(r >= 0.1);
  CHECK(r <= 0.3);
  CHECK(io::manifest_to_json(io::manifest_from_plan(plan)) == io::manifest_to_json(m));
  CHECK_THROWS_AS(io::manifest_from_plan(nlohmann::json::parse(R"({"families": [{"kind": "er", "n": [1, 2, 3], "m": 1}]})")), io::ParseError);
}

TEST_CASE("training configs parse and reject unknown keys") {
  TrainConfig c;
  io::train_config_from_json(nlohmann::json::parse(R"({"epochs": 3, "lr0": 0.01, "loss": "mis"})"), c);
  CHECK(c.epochs == 3);
  CHECK(c.lr0 == 0.01);
  CHECK(c.loss == LossKind::IndependentSet);
  CHECK(c.batch_size == 10);
  CHECK_THROWS_AS(io::train_config_from_json(nlohmann::json::parse(R"({"epoch": 3})"), c), io::ParseError);
  TrainConfig d;
  io::train_config_from_json(io::train_config_to_json(c), d);
  CHECK(io::train_config_to_json(d) == io::train_config_to_json(c));
}

TEST_CASE("datasets are written with a manifest and read back") {
  auto dir = scratch("dataset");
  io::DatasetManifest m;
  m.global_seed = 5;
  m.language = "maxcut";
  m.entries.push_back({gen::ER{12, 20}, 1, {}});
  m.entries.push_back({gen::Regular{10, 3}, 2, {}});
  io::write_dataset(dir, m);
  CHECK(m.entries[0].files.size() == 1);
  CHECK(fs::exists(dir / "manifest.json"));
  auto insts = io::read_dataset(dir);
  REQUIRE(insts.size() == 2);
  CHECK(insts[0] == gen_er(12, 20, 1));
  CHECK(insts[1] == gen_regular(10, 3, 2));
  const auto h = io::manifest_hash(dir);
  CHECK(h.size() == 16);

  auto again = scratch("dataset2");
  io::DatasetManifest m2 = m;
  for (auto& e : m2.entries) e.files.clear();
  io::write_dataset(again, m2);
  CHECK(io::manifest_hash(again) == h);
  CHECK(io::read_file(again / "manifest.json") == io::read_file(dir / "manifest.json"));

  auto labeled = scratch("dataset3");
  io::DatasetManifest m3;
  m3.language = "3col";
  m3.entries.push_back({gen::Hard3Col{15}, 4, {}});
  io::write_dataset(labeled, m3);
  REQUIRE(m3.entries[0].files.size() == 2);
  CHECK(m3.entries[0].files[0].find("_pos") != std::string::npos);
  auto pair = io::read_dataset(labeled, builtin_language(Problem::ThreeCol));
  CHECK(pair[1].num_constraints() == pair[0].num_constraints() + 1);
}

}  // TEST_SUITE
