#include "runcsp/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "runcsp/rng.hpp"

namespace runcsp::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kModelMagic[8] = {'R', 'U', 'N', 'C', 'S', 'P', 'M', '1'};
constexpr int kModelVersion = 1;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::string trim_left(const std::string& s) {
  const auto p = s.find_first_not_of(" \t\r");
  return p == std::string::npos ? std::string() : s.substr(p);
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  if (at + 8 > in.size()) throw ParseError("truncated model file");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return x;
}

}  // namespace

LanguagePtr language_by_name(const std::string& name) {
  if (name == "max2sat") return builtin_language(Problem::Max2Sat);
  if (name == "maxcut") return builtin_language(Problem::MaxCut);
  if (name == "3col") return builtin_language(Problem::ThreeCol);
  if (name == "maxis") return builtin_language(Problem::MaxIS);
  if (name.rfind("kcol:", 0) == 0) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(name.substr(5), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != name.size() - 5 || k < 2) throw InvalidArgument("bad coloring language " + name);
    return coloring_language(k);
  }
  throw InvalidArgument("unknown problem " + name);
}

// ---- DIMACS ----------------------------------------------------------------

Instance parse_dimacs_cnf(std::istream& in) {
  std::string line;
  long n = -1, m = -1;
  std::size_t lineno = 0;
  std::vector<Constraint> clauses;
  std::vector<long> lits;
  auto fail = [&](const std::string& what) {
    throw ParseError("line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim_left(line);
    if (t.empty() || t[0] == 'c') continue;
    if (t[0] == '%') break;
    if (t[0] == 'p') {
      std::istringstream hs(t);
      std::string p, fmt;
      if (!(hs >> p >> fmt >> n >> m) || fmt != "cnf" || n < 0 || m < 0) fail("malformed header");
      continue;
    }
    if (n < 0) fail("clause before header");
    std::istringstream ls(t);
    std::string tok;
    while (ls >> tok) {
      long lit = 0;
      try {
        std::size_t used = 0;
        lit = std::stol(tok, &used);
        if (used != tok.size()) fail("bad literal '" + tok + "'");
      } catch (const std::logic_error&) {
        fail("bad literal '" + tok + "'");
      }
      if (lit != 0) {
        if (lit > n || -lit > n) fail("variable index out of range");
        lits.push_back(lit);
        continue;
      }
      if (lits.size() != 2) fail("unsupported clause arity " + std::to_string(lits.size()) + " (only 2-CNF)");
      const long a = lits[0], b = lits[1];
      const int x = static_cast<int>(std::labs(a)) - 1, y = static_cast<int>(std::labs(b)) - 1;
      if (x == y) fail("clause mentions one variable twice");
      if (a < 0 && b < 0) {
        clauses.push_back({x, y, max2sat::kR00});
      } else if (a > 0 && b > 0) {
        clauses.push_back({x, y, max2sat::kR11});
      } else if (a < 0) {
        clauses.push_back({x, y, max2sat::kR01});
      } else {
        clauses.push_back({y, x, max2sat::kR01});
      }
      lits.clear();
    }
  }
  if (n < 0) throw ParseError("missing 'p cnf' header");
  if (!lits.empty()) throw ParseError("unterminated clause at end of file");
  if (static_cast<long>(clauses.size()) != m)
    throw ParseError("header announces " + std::to_string(m) + " clauses, found " + std::to_string(clauses.size()));
  return Instance(static_cast<int>(n), std::move(clauses), builtin_language(Problem::Max2Sat));
}

Instance parse_dimacs_cnf(const fs::path& path) {
  auto in = open_in(path);
  return parse_dimacs_cnf(in);
}

void write_dimacs_cnf(std::ostream& out, const Instance& inst) {
  if (inst.language().name() != "max2sat") throw InvalidArgument("DIMACS output needs a Max-2-SAT instance");
  out << "p cnf " << inst.num_vars() << ' ' << inst.num_constraints() << '\n';
  for (const auto& c : inst.constraints()) {
    const int u = c.u + 1, v = c.v + 1;
    switch (c.rel) {
      case max2sat::kR00: out << -u << ' ' << -v << " 0\n"; break;
      case max2sat::kR01: out << -u << ' ' << v << " 0\n"; break;
      default: out << u << ' ' << v << " 0\n"; break;
    }
  }
}

// ---- edge lists ------------------------------------------------------------

Instance parse_edge_list(std::istream& in, EdgeFormat format, std::vector<std::string>* warnings) {
  std::string line;
  std::size_t lineno = 0;
  long n = -1, m = -1;
  std::vector<Constraint> edges;
  std::vector<std::pair<long, long>> raw;
  bool negative_weights = false;
  auto fail = [&](const std::string& what) {
    throw ParseError("line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim_left(line);
    if (t.empty()) continue;
    if (t[0] == '#' || t[0] == '%' || t[0] == 'c') {
      std::istringstream cs(t.substr(1));
      std::string word;
      long value = 0;
      if (format == EdgeFormat::Simple && cs >> word >> value && word == "nodes") n = value;
      continue;
    }
    std::istringstream ls(t);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    std::vector<long> nums;
    for (const auto& s : toks) {
      try {
        std::size_t used = 0;
        nums.push_back(std::stol(s, &used));
        if (used != s.size()) fail("bad number '" + s + "'");
      } catch (const std::logic_error&) {
        fail("bad number '" + s + "'");
      }
    }
    if (format == EdgeFormat::Gset && m < 0) {
      if (nums.size() != 2 || nums[0] < 0 || nums[1] < 0) fail("expected 'n m' header");
      n = nums[0];
      m = nums[1];
      continue;
    }
    if (format == EdgeFormat::Gset) {
      if (nums.size() != 2 && nums.size() != 3) fail("expected 'u v w'");
      const long w = nums.size() == 3 ? nums[2] : 1;
      if (w != 1 && w != -1) fail("weighted edge (weight " + std::to_string(w) + ") is not supported");
      negative_weights = negative_weights || w == -1;
      if (nums[0] < 1 || nums[0] > n || nums[1] < 1 || nums[1] > n) fail("vertex index out of range");
      raw.emplace_back(nums[0] - 1, nums[1] - 1);
    } else {
      if (nums.size() != 2) fail("expected 'u v'");
      if (nums[0] < 0 || nums[1] < 0) fail("vertex index out of range");
      raw.emplace_back(nums[0], nums[1]);
    }
    if (raw.back().first == raw.back().second) fail("self-loop");
  }
  if (format == EdgeFormat::Gset) {
    if (m < 0) throw ParseError("missing 'n m' header");
    if (static_cast<long>(raw.size()) != m)
      throw ParseError("header announces " + std::to_string(m) + " edges, found " + std::to_string(raw.size()));
  } else {
    long mx = -1;
    for (auto [u, v] : raw) mx = std::max({mx, u, v});
    if (n < 0) n = mx + 1;
    if (mx >= n) throw ParseError("vertex index out of range");
  }
  std::size_t dups = 0;
  std::vector<std::pair<long, long>> seen;
  for (auto [u, v] : raw) {
    seen.emplace_back(std::min(u, v), std::max(u, v));
    edges.push_back({static_cast<int>(u), static_cast<int>(v), 0});
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 1; i < seen.size(); ++i) dups += seen[i] == seen[i - 1] ? 1 : 0;
  if (warnings != nullptr) {
    if (negative_weights) warnings->push_back("edge weights of -1 read as 1");
    if (dups > 0) warnings->push_back(std::to_string(dups) + " repeated edge(s) kept as separate constraints");
  }
  return Instance(static_cast<int>(n), std::move(edges), builtin_language(Problem::MaxCut));
}

Instance parse_edge_list(const fs::path& path, EdgeFormat format, std::vector<std::string>* warnings) {
  auto in = open_in(path);
  return parse_edge_list(in, format, warnings);
}

void write_edge_list(std::ostream& out, const Instance& graph) {
  if (graph.language().size() != 1) throw InvalidArgument("edge lists hold single-relation instances only");
  out << "# nodes " << graph.num_vars() << '\n';
  for (const auto& c : graph.constraints()) out << c.u << ' ' << c.v << '\n';
}

Instance read_instance(const fs::path& path, LanguagePtr language, std::vector<std::string>* warnings) {
  const auto ext = path.extension().string();
  if (ext == ".cnf") {
    Instance inst = parse_dimacs_cnf(path);
    if (language && !(*language == inst.language())) throw InvalidArgument("formula files hold Max-2-SAT instances only");
    return inst;
  }
  EdgeFormat format = EdgeFormat::Simple;
  if (ext == ".gset") {
    format = EdgeFormat::Gset;
  } else if (ext != ".edges") {
    // Gset files start with a two-number header followed by three-column lines.
    auto in = open_in(path);
    std::string line;
    std::vector<std::size_t> widths;
    bool declared_nodes = false;
    while (widths.size() < 2 && std::getline(in, line)) {
      const std::string t = trim_left(line);
      if (t.empty()) continue;
      if (t[0] == '#' || t[0] == '%' || t[0] == 'c') {
        declared_nodes = declared_nodes || t.find("nodes") != std::string::npos;
        continue;
      }
      std::istringstream ls(t);
      std::string tok;
      std::size_t w = 0;
      while (ls >> tok) ++w;
      widths.push_back(w);
    }
    if (!declared_nodes && !widths.empty() && widths.size() == 2 && widths[0] == 2 && widths[1] == 3)
      format = EdgeFormat::Gset;
  }
  Instance g = parse_edge_list(path, format, warnings);
  return language ? relabel(g, language) : g;
}

void write_assignment(std::ostream& out, const HardAssignment& a, const std::string& summary) {
  for (std::size_t i = 0; i < a.size(); ++i) out << i << ' ' << a[i] << '\n';
  out << "# " << summary << '\n';
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- model container -------------------------------------------------------

json language_to_json(const ConstraintLanguage& lang) {
  json rels = json::array();
  for (const auto& r : lang.relations()) {
    json rows = json::array();
    for (int i = 0; i < lang.domain_size(); ++i) {
      json row = json::array();
      for (int j = 0; j < lang.domain_size(); ++j) row.push_back(r.contains(i, j) ? 1 : 0);
      rows.push_back(row);
    }
    rels.push_back(rows);
  }
  return {{"name", lang.name()}, {"domain_size", lang.domain_size()}, {"relations", rels}};
}

LanguagePtr language_from_json(const json& j) {
  const auto name = j.at("name").get<std::string>();
  const int d = j.at("domain_size").get<int>();
  std::vector<Relation> rels;
  int id = 0;
  for (const auto& rows : j.at("relations"))
    rels.emplace_back(id++, d, rows.get<std::vector<std::vector<int>>>());
  auto lang = std::make_shared<const ConstraintLanguage>(name, d, std::move(rels));
  // Prefer the shared builtin object when the descriptor names one exactly.
  try {
    auto builtin = language_by_name(name);
    if (*builtin == *lang) return builtin;
  } catch (const InvalidArgument&) {
  }
  return lang;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},       {"batch_size", c.batch_size}, {"lr0", c.lr0},
          {"lr_decay", c.lr_decay},   {"decay_every", c.decay_every}, {"clip_norm", c.clip_norm},
          {"l2_weight", c.l2_weight}, {"beta1", c.beta1},           {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon}, {"seed", c.seed},
          {"loss", c.loss == LossKind::Csp ? "csp" : "mis"}};
}

void train_config_from_json(const json& j, TrainConfig& c) {
  if (!j.is_object()) throw ParseError("training config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "lr0") c.lr0 = v.get<double>();
      else if (key == "lr_decay") c.lr_decay = v.get<double>();
      else if (key == "decay_every") c.decay_every = v.get<int>();
      else if (key == "clip_norm") c.clip_norm = v.get<double>();
      else if (key == "l2_weight") c.l2_weight = v.get<double>();
      else if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "loss") {
        const auto name = v.get<std::string>();
        if (name != "csp" && name != "mis") throw ParseError("loss must be csp or mis");
        c.loss = name == "csp" ? LossKind::Csp : LossKind::IndependentSet;
      } else {
        throw ParseError("unknown training config key " + key);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad training config: ") + e.what());
  }
}

std::string serialize_model(const ModelFile& model) {
  const auto layout = parameter_layout(model.config);
  if (layout.size() != model.params.size()) throw InvalidArgument("parameters do not match model config");
  json params = json::array();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& t = model.params.tensors()[i];
    if (t.name != layout[i].first || t.value.rows() != layout[i].second[0] || t.value.cols() != layout[i].second[1])
      throw InvalidArgument("parameter " + t.name + " does not match model config");
    params.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}});
  }
  const auto& c = model.config;
  json header = {{"format_version", kModelVersion},
                 {"language", language_to_json(*c.language)},
                 {"state_size", c.state_size},
                 {"readout", c.sigmoid_readout() ? "sigmoid" : "softmax"},
                 {"t_max_train", c.t_max_train},
                 {"t_max_eval", c.t_max_eval},
                 {"lambda", c.lambda},
                 {"kappa", c.kappa},
                 {"parameters", params},
                 {"train_config", model.train_config},
                 {"provenance", model.provenance}};
  const std::string text = header.dump();
  std::string out(kModelMagic, sizeof kModelMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& t : model.params.tensors())
    for (double x : t.value.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

ModelFile deserialize_model(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw ParseError("not a model file");
  const std::uint64_t len = get_u64(bytes, 8);
  if (16 + len > bytes.size()) throw ParseError("truncated model header");
  json header;
  try {
    header = json::parse(bytes.substr(16, len));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model header: ") + e.what());
  }
  ModelFile out;
  try {
    if (header.at("format_version").get<int>() != kModelVersion) throw ParseError("unsupported model format version");
    out.config.language = language_from_json(header.at("language"));
    out.config.state_size = header.at("state_size").get<int>();
    out.config.t_max_train = header.at("t_max_train").get<int>();
    out.config.t_max_eval = header.at("t_max_eval").get<int>();
    out.config.lambda = header.at("lambda").get<double>();
    out.config.kappa = header.at("kappa").get<double>();
    out.train_config = header.at("train_config");
    out.provenance = header.at("provenance");
    const auto layout = parameter_layout(out.config);
    const auto& params = header.at("parameters");
    if (params.size() != layout.size()) throw ParseError("parameter list does not match model config");
    std::size_t at = 16 + len;
    std::vector<NamedTensor> tensors;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto name = params[i].at("name").get<std::string>();
      const auto shape = params[i].at("shape").get<std::vector<std::size_t>>();
      if (name != layout[i].first || shape.size() != 2 || shape[0] != layout[i].second[0] ||
          shape[1] != layout[i].second[1])
        throw ParseError("parameter " + name + " does not match model config");
      Tensor t(shape[0], shape[1]);
      for (auto& x : t.values()) {
        x = std::bit_cast<double>(get_u64(bytes, at));
        at += 8;
      }
      tensors.push_back({name, std::move(t)});
    }
    if (at != bytes.size()) throw ParseError("trailing bytes after parameters");
    out.params = Parameters(std::move(tensors));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("bad model header: ") + e.what());
  }
  return out;
}

void save_model(const fs::path& path, const ModelFile& model) { atomic_write(path, serialize_model(model)); }

ModelFile load_model(const fs::path& path) { return deserialize_model(read_file(path)); }

// ---- datasets --------------------------------------------------------------

json spec_to_json(const GenSpec& spec) {
  json j = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, gen::ER>) return {{"n", s.n}, {"m", s.m}};
        else if constexpr (std::is_same_v<T, gen::Regular>) return {{"n", s.n}, {"degree", s.degree}};
        else if constexpr (std::is_same_v<T, gen::Geometric>) return {{"n", s.n}, {"radius", s.radius}};
        else if constexpr (std::is_same_v<T, gen::PowerlawCluster>) return {{"n", s.n}, {"m", s.m}, {"p", s.p}};
        else if constexpr (std::is_same_v<T, gen::Caveman>) return {{"cliques", s.cliques}, {"clique_size", s.clique_size}};
        else if constexpr (std::is_same_v<T, gen::Cnf2>) return {{"n_vars", s.n_vars}, {"n_clauses", s.n_clauses}};
        else if constexpr (std::is_same_v<T, gen::Hard3Col>) return {{"n", s.n}};
        else return {{"c", s.c}, {"k", s.k}, {"p", s.p}, {"force_optimum", s.force_optimum}};
      },
      spec);
  j["kind"] = spec_kind(spec);
  return j;
}

GenSpec spec_from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "er") return gen::ER{j.at("n").get<int>(), j.at("m").get<int>()};
    if (kind == "regular") return gen::Regular{j.at("n").get<int>(), j.at("degree").get<int>()};
    if (kind == "geometric") return gen::Geometric{j.at("n").get<int>(), j.at("radius").get<double>()};
    if (kind == "powerlaw_cluster")
      return gen::PowerlawCluster{j.at("n").get<int>(), j.at("m").get<int>(), j.at("p").get<double>()};
    if (kind == "caveman") return gen::Caveman{j.at("cliques").get<int>(), j.at("clique_size").get<int>()};
    if (kind == "cnf2") return gen::Cnf2{j.at("n_vars").get<int>(), j.at("n_clauses").get<int>()};
    if (kind == "hard3col") return gen::Hard3Col{j.at("n").get<int>()};
    if (kind == "rb_is")
      return gen::RbIs{j.at("c").get<int>(), j.at("k").get<int>(), j.at("p").get<double>(),
                       j.at("force_optimum").get<bool>()};
    throw ParseError("unknown generator kind " + kind);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad generator spec: ") + e.what());
  }
}

json manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"spec", spec_to_json(e.spec)}, {"seed", e.seed}, {"files", e.files}});
  return {{"format_version", m.version}, {"global_seed", m.global_seed}, {"language", m.language}, {"entries", entries}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.version = j.at("format_version").get<int>();
    m.global_seed = j.at("global_seed").get<std::uint64_t>();
    m.language = j.at("language").get<std::string>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({spec_from_json(e.at("spec")), e.at("seed").get<std::uint64_t>(),
                           e.at("files").get<std::vector<std::string>>()});
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what());
  }
  return m;
}

DatasetManifest manifest_from_plan(const json& plan) {
  DatasetManifest m;
  try {
    m.global_seed = plan.value("seed", std::uint64_t{0});
    m.language = plan.value("language", std::string{});
    std::uint64_t index = 0;
    for (const auto& family : plan.at("families")) {
      const int count = family.value("count", 1);
      if (count < 0) throw ParseError("family count must be non-negative");
      for (int i = 0; i < count; ++i, ++index) {
        const std::uint64_t seed = derive_seed(m.global_seed, {index});
        Rng draw(derive_seed(seed, {0x706c616eULL}));
        json concrete = json::object();
        for (const auto& [key, v] : family.items()) {
          if (key == "count") continue;
          if (v.is_array()) {
            if (v.size() != 2) throw ParseError("range for " + key + " must have two elements");
            if (v[0].is_number_integer() && v[1].is_number_integer())
              concrete[key] = draw.range(v[0].get<int>(), v[1].get<int>());
            else
              concrete[key] = draw.uniform(v[0].get<double>(), v[1].get<double>());
          } else {
            concrete[key] = v;
          }
        }
        m.entries.push_back({spec_from_json(concrete), seed, {}});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad generation plan: ") + e.what());
  }
  if (m.language.empty() && !m.entries.empty()) {
    const auto kind = spec_kind(m.entries.front().spec);
    m.language = kind == "cnf2" ? "max2sat" : kind == "hard3col" ? "3col" : kind == "rb_is" ? "maxis" : "maxcut";
  }
  return m;
}

void write_dataset(const fs::path& dir, DatasetManifest& manifest) {
  fs::create_directories(dir);
  std::size_t index = 0;
  for (auto& entry : manifest.entries) {
    const auto instances = generate(entry.spec, entry.seed);
    entry.files.clear();
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const bool cnf = inst.language().name() == "max2sat";
      char name[64];
      const char* suffix = instances.size() == 2 ? (i == 0 ? "_pos" : "_neg") : "";
      std::snprintf(name, sizeof name, "inst_%06zu%s.%s", index, suffix, cnf ? "cnf" : "edges");
      std::ostringstream body;
      if (cnf) write_dimacs_cnf(body, inst);
      else write_edge_list(body, inst);
      atomic_write(dir / name, body.str());
      entry.files.push_back(name);
    }
    ++index;
  }
  atomic_write(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

std::vector<Instance> read_dataset(const fs::path& dir, LanguagePtr language) {
  json j;
  try {
    j = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what());
  }
  const auto manifest = manifest_from_json(j);
  if (!language && !manifest.language.empty()) language = language_by_name(manifest.language);
  std::vector<Instance> out;
  for (const auto& e : manifest.entries)
    for (const auto& f : e.files) {
      Instance inst = read_instance(dir / f);
      if (language && !(inst.language() == *language)) inst = relabel(inst, language);
      out.push_back(std::move(inst));
    }
  return out;
}

std::string manifest_hash(const fs::path& dir) {
  const std::string bytes = read_file(dir / "manifest.json");
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace runcsp::io
