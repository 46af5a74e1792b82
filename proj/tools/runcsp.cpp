// Command-line front end: generate, train, solve, evaluate, gradcheck.
//
// Exit codes: 0 success, 1 usage or invalid arguments, 2 unreadable input,
// 3 numeric failure (non-finite loss, failed gradient check).

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "runcsp/evaluation.hpp"
#include "runcsp/generators.hpp"
#include "runcsp/io.hpp"
#include "runcsp/model.hpp"
#include "runcsp/rng.hpp"
#include "runcsp/runtime.hpp"
#include "runcsp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace runcsp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int default_jobs() {
  if (const char* env = std::getenv("RUNCSP_JOBS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

io::EdgeFormat edge_format(const std::string& name) {
  return name == "gset" ? io::EdgeFormat::Gset : io::EdgeFormat::Simple;
}

Instance load_instance(const fs::path& path, const std::string& format, const LanguagePtr& lang) {
  std::vector<std::string> warnings;
  Instance inst = [&] {
    if (format == "auto") return io::read_instance(path, lang, &warnings);
    if (format == "cnf") return io::parse_dimacs_cnf(path);
    Instance g = io::parse_edge_list(path, edge_format(format), &warnings);
    return lang ? relabel(g, lang) : g;
  }();
  for (const auto& w : warnings) std::cerr << "warning: " << path.string() << ": " << w << "\n";
  if (lang && !(inst.language() == *lang))
    throw InvalidArgument(path.string() + " is a " + inst.language().name() + " instance, model expects " + lang->name());
  return inst;
}

Objective objective_for(const ModelConfig& c) {
  return c.language->name() == "maxis" ? Objective::IndependentSet : Objective::Satisfied;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string spec;
  std::string family;
  std::string out;
  std::string language;
  std::uint64_t seed = 0;
  int count = 1;
  std::string n, m, degree, vars, clauses, cliques, clique_size, c, k;
  std::string radius, p;
  bool force = false;
};

// "12" -> 12, "100:2000" -> [100, 2000]
json range_value(const std::string& text, bool integer) {
  const auto colon = text.find(':');
  auto one = [&](const std::string& s) -> json {
    std::size_t used = 0;
    json v = integer ? json(std::stoi(s, &used)) : json(std::stod(s, &used));
    if (used != s.size()) throw InvalidArgument("bad numeric value '" + text + "'");
    return v;
  };
  try {
    if (colon == std::string::npos) return one(text);
    return json::array({one(text.substr(0, colon)), one(text.substr(colon + 1))});
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad numeric value '" + text + "'");
  }
}

json plan_from_flags(const GenerateArgs& a) {
  json fam = {{"kind", a.family}, {"count", a.count}};
  auto put = [&](const char* key, const std::string& v, bool integer) {
    if (v.empty()) throw InvalidArgument(std::string("--") + key + " is required for family " + a.family);
    fam[key] = range_value(v, integer);
  };
  const std::string& f = a.family;
  if (f == "er") put("n", a.n, true), put("m", a.m, true);
  else if (f == "regular") put("n", a.n, true), put("degree", a.degree, true);
  else if (f == "geometric") put("n", a.n, true), put("radius", a.radius, false);
  else if (f == "powerlaw_cluster") put("n", a.n, true), put("m", a.m, true), put("p", a.p, false);
  else if (f == "caveman") put("cliques", a.cliques, true), put("clique_size", a.clique_size, true);
  else if (f == "cnf2") put("n_vars", a.vars, true), put("n_clauses", a.clauses, true);
  else if (f == "hard3col") put("n", a.n, true);
  else if (f == "rb_is") put("c", a.c, true), put("k", a.k, true), put("p", a.p, false), fam["force_optimum"] = a.force;
  else throw InvalidArgument("unknown family " + f);
  json plan = {{"seed", a.seed}, {"families", json::array({fam})}};
  if (!a.language.empty()) plan["language"] = a.language;
  return plan;
}

int run_generate(const GenerateArgs& a) {
  json plan;
  if (!a.spec.empty()) {
    try {
      plan = json::parse(io::read_file(a.spec));
    } catch (const json::exception& e) {
      throw io::ParseError(a.spec + ": " + e.what());
    }
  } else if (!a.family.empty()) {
    plan = plan_from_flags(a);
  } else {
    throw InvalidArgument("generate needs --spec or --family");
  }
  auto manifest = io::manifest_from_plan(plan);
  const auto t0 = std::chrono::steady_clock::now();
  io::write_dataset(a.out, manifest);
  std::size_t files = 0;
  for (const auto& e : manifest.entries) files += e.files.size();
  std::cout << "wrote " << files << " instance file(s) to " << a.out << " in " << seconds_since(t0) << " s\n"
            << "manifest " << io::manifest_hash(a.out) << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string problem;
  std::string data;
  std::string config;
  std::string out;
  std::string init;
  int epochs = 0;
  int batch_size = 0;
  int state_size = 0;
  int t_max = 0;
  double lr = -1;
  double kappa = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int checkpoint_every = 1;
  int log_every = 10;
};

int run_train(const TrainArgs& a) {
  ModelConfig model;
  model.language = io::language_by_name(a.problem);
  TrainConfig tc;
  tc.loss = model.language->name() == "maxis" ? LossKind::IndependentSet : LossKind::Csp;
  if (!a.config.empty()) {
    json j;
    try {
      j = json::parse(io::read_file(a.config));
    } catch (const json::exception& e) {
      throw io::ParseError(a.config + ": " + e.what());
    }
    if (j.contains("model")) {
      const json m = j["model"];
      j.erase("model");
      try {
        model.state_size = m.value("state_size", model.state_size);
        model.t_max_train = m.value("t_max_train", model.t_max_train);
        model.t_max_eval = m.value("t_max_eval", model.t_max_eval);
        model.lambda = m.value("lambda", model.lambda);
        model.kappa = m.value("kappa", model.kappa);
      } catch (const json::exception& e) {
        throw io::ParseError(a.config + ": " + e.what());
      }
    }
    io::train_config_from_json(j, tc);
  }
  if (a.epochs > 0) tc.epochs = a.epochs;
  if (a.batch_size > 0) tc.batch_size = a.batch_size;
  if (a.state_size > 0) model.state_size = a.state_size;
  if (a.t_max > 0) model.t_max_train = a.t_max;
  if (a.lr >= 0) tc.lr0 = a.lr;
  if (a.kappa >= 0) model.kappa = a.kappa;
  if (a.seed_set) tc.seed = a.seed;
  model.validate();
  tc.validate();

  const auto data = io::read_dataset(a.data, model.language);
  if (data.empty()) throw InvalidArgument("dataset " + a.data + " is empty");
  io::ModelFile file;
  file.config = model;
  file.train_config = io::train_config_to_json(tc);
  file.provenance = {{"seed", tc.seed}, {"dataset_manifest", io::manifest_hash(a.data)}, {"instances", data.size()}};

  Parameters start;
  const Parameters* initial = nullptr;
  if (!a.init.empty()) {
    auto prev = io::load_model(a.init);
    if (!(*prev.config.language == *model.language) || prev.config.state_size != model.state_size)
      throw InvalidArgument("--init model does not match problem and state size");
    start = std::move(prev.params);
    initial = &start;
  }

  std::cout << "training " << model.language->name() << " k=" << model.state_size << " on " << data.size()
            << " instances, " << tc.epochs << " epochs, batch " << tc.batch_size << "\n";
  const auto t0 = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_batch = [&](const BatchLog& log) {
    if (a.log_every > 0 && log.batch % a.log_every == 0)
      std::cerr << "epoch=" << log.epoch << " batch=" << log.batch << " loss=" << log.loss << " lr=" << log.lr
                << " grad_norm=" << log.grad_norm << "\n";
  };
  const fs::path checkpoint = fs::path(a.out).concat(".ckpt");
  hooks.on_epoch = [&](int epoch, double mean, const Parameters& params) {
    std::cout << "epoch=" << epoch << " mean_loss=" << mean << " elapsed=" << seconds_since(t0) << "s\n";
    if (a.checkpoint_every > 0 && (epoch + 1) % a.checkpoint_every == 0 && epoch + 1 < tc.epochs) {
      io::ModelFile ck = file;
      ck.params = params;
      ck.provenance["epochs_completed"] = epoch + 1;
      io::save_model(checkpoint, ck);
    }
  };
  TrainResult result;
  try {
    result = train(tc, model, data, initial, hooks);
  } catch (const TrainingError& e) {
    throw NumericFailure(e.what());
  }
  file.params = std::move(result.params);
  file.provenance["epochs_completed"] = tc.epochs;
  io::save_model(a.out, file);
  std::error_code ec;
  fs::remove(checkpoint, ec);
  std::cout << "saved " << a.out << " after " << seconds_since(t0) << " s\n";
  return 0;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string model;
  std::string instance;
  std::string format = "auto";
  std::string assignment;
  int runs = 64;
  int iters = 100;
  int chunk = 0;
  std::uint64_t seed = 0;
  int degree = 0;
};

int run_solve(const SolveArgs& a) {
  const auto mf = io::load_model(a.model);
  const Instance inst = load_instance(a.instance, a.format, mf.config.language);
  const auto objective = objective_for(mf.config);
  if (inst.num_constraints() == 0 && objective != Objective::IndependentSet)
    throw io::ParseError(a.instance + " has no constraints");
  BoostOptions o;
  o.runs = a.runs;
  o.t_max = a.iters;
  o.chunk = a.chunk;
  o.seed = a.seed;
  o.objective = objective;
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = boosted_solve(mf.config, mf.params, inst, o);
  const double secs = seconds_since(t0);
  const std::size_t sat = count_satisfied(inst, r.best);
  std::ostringstream summary;
  summary << "objective " << r.objective << " satisfied " << sat << "/" << inst.num_constraints();
  std::cout << "objective " << r.objective << "\n"
            << "satisfied " << sat << "/" << inst.num_constraints() << "\n"
            << "best_iteration " << r.best_iteration + 1 << "\n"
            << "best_run " << r.best_copy << "\n";
  if (a.degree > 0) std::cout << "p_value " << p_value(static_cast<double>(sat), inst.num_vars(), a.degree) << "\n";
  std::cout << "seconds " << secs << "\n";
  if (!a.assignment.empty()) {
    std::ostringstream out;
    io::write_assignment(out, r.best, summary.str());
    io::atomic_write(a.assignment, out.str());
  }
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::vector<std::string> instances;
  std::string problem;
  std::string format = "auto";
  std::vector<std::string> baselines;
  std::string out;
  std::string summary;
  int runs = 64;
  int iters = 100;
  std::uint64_t seed = 0;
  int degree = 0;
  int jobs = 0;
  std::size_t flips = 0;
};

std::vector<EvalRecord> evaluate_one(const EvaluateArgs& a, const io::ModelFile* mf, const std::string& name,
                                     const Instance& inst, std::uint64_t seed) {
  std::vector<EvalRecord> out;
  const bool binary = inst.domain_size() == 2;
  const bool cut = inst.language().name() == "maxcut";
  auto record = [&](const std::string& method, std::size_t sat, double objective, double secs) {
    EvalRecord r{name, method, sat, inst.num_constraints(), 0.0, objective, 0.0, false, secs};
    if (a.degree > 0 && cut && (method == "runcsp" || method == "local-search")) {
      r.p_value = p_value(static_cast<double>(sat), inst.num_vars(), a.degree);
      r.has_p_value = true;
    }
    out.push_back(r);
  };
  if (mf != nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (inst.num_constraints() == 0 && objective_for(mf->config) != Objective::IndependentSet) {
      record("runcsp", 0, 0.0, 0.0);
    } else {
      BoostOptions o;
      o.runs = a.runs;
      o.t_max = a.iters;
      o.seed = seed;
      o.objective = objective_for(mf->config);
      const RunResult r = boosted_solve(mf->config, mf->params, inst, o);
      record("runcsp", count_satisfied(inst, r.best), r.objective, seconds_since(t0));
    }
  }
  for (const auto& b : a.baselines) {
    const auto t0 = std::chrono::steady_clock::now();
    if (b == "dsatur") {
      const auto c = dsatur(inst);
      record(b, inst.num_constraints() - count_conflicts(inst, c.colors), c.num_colors, seconds_since(t0));
    } else if (b == "greedy-is") {
      const auto s = greedy_is(inst);
      record(b, inst.num_constraints(), static_cast<double>(s.size()), seconds_since(t0));
    } else if (b == "local-search") {
      if (!binary) throw InvalidArgument("local-search needs a two-valued domain");
      const std::size_t flips = a.flips > 0 ? a.flips : 100 * static_cast<std::size_t>(inst.num_vars());
      const auto h = local_search_maxsat(inst, flips, 0.2, seed);
      const auto sat = count_satisfied(inst, h);
      record(b, sat, static_cast<double>(sat), seconds_since(t0));
    }
  }
  return out;
}

int run_evaluate(const EvaluateArgs& a) {
  for (const auto& b : a.baselines)
    if (b != "dsatur" && b != "greedy-is" && b != "local-search") throw InvalidArgument("unknown baseline " + b);
  std::optional<io::ModelFile> mf;
  if (!a.model.empty()) mf = io::load_model(a.model);
  if (!mf && a.baselines.empty()) throw InvalidArgument("evaluate needs --model or --baselines");

  std::vector<std::pair<std::string, Instance>> work;
  LanguagePtr lang = mf ? mf->config.language : nullptr;
  if (!lang && !a.problem.empty()) lang = io::language_by_name(a.problem);
  if (!a.data.empty()) {
    json j;
    try {
      j = json::parse(io::read_file(fs::path(a.data) / "manifest.json"));
    } catch (const json::exception& e) {
      throw io::ParseError(a.data + ": " + e.what());
    }
    const auto manifest = io::manifest_from_json(j);
    LanguagePtr data_lang = lang;
    if (!data_lang && !manifest.language.empty()) data_lang = io::language_by_name(manifest.language);
    for (const auto& e : manifest.entries)
      for (const auto& f : e.files) work.emplace_back(f, load_instance(fs::path(a.data) / f, "auto", data_lang));
  }
  for (const auto& path : a.instances) work.emplace_back(fs::path(path).filename().string(), load_instance(path, a.format, lang));
  if (work.empty()) throw InvalidArgument("no instances to evaluate");

  const int jobs = std::max(1, std::min<int>(a.jobs > 0 ? a.jobs : default_jobs(), static_cast<int>(work.size())));
  std::vector<std::vector<EvalRecord>> results(work.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
      try {
        results[i] = evaluate_one(a, mf ? &*mf : nullptr, work[i].first, work[i].second, derive_seed(a.seed, {i}));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = work.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  for (auto& rs : results)
    for (auto& r : rs) report.add(std::move(r));
  if (!a.out.empty()) {
    std::ostringstream csv;
    report.write_csv(csv);
    io::atomic_write(a.out, csv.str());
  }
  const std::string agg = report.aggregate_json();
  if (!a.summary.empty()) io::atomic_write(a.summary, agg + "\n");
  std::cout << agg << "\n";
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::string problem;
  int k = 8;
  int t = 3;
  int instances = 20;
  int max_n = 8;
  int max_m = 12;
  double tol = 1e-3;
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
  ModelConfig model;
  model.language = io::language_by_name(a.problem);
  model.state_size = a.k;
  model.t_max_train = a.t;
  model.validate();
  if (a.max_n < 2 || a.max_m < 1 || a.instances < 1) throw InvalidArgument("need --n >= 2, --m >= 1, --instances >= 1");
  const LossKind loss = model.language->name() == "maxis" ? LossKind::IndependentSet : LossKind::Csp;
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < a.instances; ++i) {
    const auto s = derive_seed(a.seed, {static_cast<std::uint64_t>(i)});
    Rng draw(s);
    const int n = draw.range(2, a.max_n);
    const int m = draw.range(1, a.max_m);
    const Instance inst = gen_random_csp(model.language, n, m, derive_seed(s, {1}));
    const auto params = init_params(model, derive_seed(s, {2}));
    const auto rep = check_loss_gradients(model, params, inst, loss, derive_seed(s, {3}), 1e-5, a.tol);
    const bool pass = rep.max_rel_error < a.tol;
    ok = ok && pass;
    worst = std::max(worst, rep.max_rel_error);
    std::cout << "instance " << i << " n=" << n << " m=" << m << " max_rel_error=" << rep.max_rel_error
              << (rep.kinks > 0 ? " (clamp kink)" : "") << (pass ? " ok" : " FAIL") << "\n";
  }
  std::cout << (ok ? "PASS" : "FAIL") << " worst max_rel_error=" << worst << " tol=" << a.tol << "\n";
  return ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  runcsp::tune_allocator();
  CLI::App app{"RUN-CSP: recurrent unsupervised message passing for binary Max-CSPs"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate a dataset directory with instances and manifest.json");
  gen->add_option("--spec", ga.spec, "JSON generation plan ({seed, language, families:[{kind, ..., count}]})");
  gen->add_option("--family", ga.family, "Family when no plan file is given")
      ->check(CLI::IsMember({"er", "regular", "geometric", "powerlaw_cluster", "caveman", "cnf2", "hard3col", "rb_is"}));
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--count", ga.count, "Instances to generate with --family");
  gen->add_option("--seed", ga.seed, "Global seed");
  gen->add_option("--language", ga.language, "Language recorded in the manifest (default by family)");
  gen->add_option("--n", ga.n, "Nodes (N or LO:HI)");
  gen->add_option("--m", ga.m, "Edges, or attachments per node for powerlaw_cluster");
  gen->add_option("--degree", ga.degree, "Degree for regular graphs");
  gen->add_option("--radius", ga.radius, "Radius for geometric graphs");
  gen->add_option("--p", ga.p, "Probability for powerlaw_cluster / rb_is");
  gen->add_option("--cliques", ga.cliques, "Number of caveman cliques");
  gen->add_option("--clique-size", ga.clique_size, "Caveman clique size");
  gen->add_option("--vars", ga.vars, "2-CNF variables");
  gen->add_option("--clauses", ga.clauses, "2-CNF clauses");
  gen->add_option("--c", ga.c, "RB cliques");
  gen->add_option("--k", ga.k, "RB clique size");
  gen->add_flag("--force", ga.force, "RB: keep one vertex per clique free of random edges");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model on a generated dataset");
  tr->add_option("--problem", ta.problem, "max2sat | maxcut | 3col | maxis | kcol:<d>")->required();
  tr->add_option("--data", ta.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--config", ta.config, "JSON training config; an optional \"model\" object sets state_size, t_max_train, lambda, kappa");
  tr->add_option("--out", ta.out, "Model file to write")->required();
  tr->add_option("--init", ta.init, "Continue from this model file");
  tr->add_option("--epochs", ta.epochs, "Override epochs");
  tr->add_option("--batch-size", ta.batch_size, "Override batch size");
  tr->add_option("--k,--state-size", ta.state_size, "Override state size");
  tr->add_option("--t-max", ta.t_max, "Override training iterations");
  tr->add_option("--lr", ta.lr, "Override initial learning rate");
  tr->add_option("--kappa", ta.kappa, "Override the Max-IS loss weight");
  auto* seed_opt = tr->add_option("--seed", ta.seed, "Training seed");
  tr->add_option("--checkpoint-every", ta.checkpoint_every, "Write <out>.ckpt every N epochs (0: never)");
  tr->add_option("--log-every", ta.log_every, "Log every N-th batch to stderr (0: never)");

  SolveArgs sa;
  auto* so = app.add_subcommand("solve", "Solve one instance with a trained model");
  so->add_option("--model", sa.model, "Model file")->required();
  so->add_option("--instance", sa.instance, "Instance file (.cnf, Gset or edge list)")->required();
  so->add_option("--format", sa.format, "auto | cnf | gset | simple")->check(CLI::IsMember({"auto", "cnf", "gset", "simple"}));
  so->add_option("--runs", sa.runs, "Parallel runs");
  so->add_option("--iters", sa.iters, "Network iterations");
  so->add_option("--chunk", sa.chunk, "Runs per forward pass (0: by memory budget)");
  so->add_option("--seed", sa.seed, "Seed");
  so->add_option("--assignment", sa.assignment, "Write the best assignment here");
  so->add_option("--degree", sa.degree, "Report the P-value for a d-regular Max-Cut instance");

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate",
                                "Evaluate a model and baselines; CSV columns: "
                                "instance,method,satisfied,constraints,fraction,objective,p_value,seconds");
  ev->add_option("--model", ea.model, "Model file");
  ev->add_option("--data", ea.data, "Dataset directory")->check(CLI::ExistingDirectory);
  ev->add_option("--instance", ea.instances, "Instance file (repeatable)");
  ev->add_option("--problem", ea.problem, "Language when evaluating baselines only");
  ev->add_option("--format", ea.format, "auto | cnf | gset | simple")->check(CLI::IsMember({"auto", "cnf", "gset", "simple"}));
  ev->add_option("--baselines", ea.baselines, "dsatur,greedy-is,local-search")->delimiter(',');
  ev->add_option("--out", ea.out, "CSV report");
  ev->add_option("--summary", ea.summary, "JSON aggregate");
  ev->add_option("--runs", ea.runs, "Parallel runs per instance");
  ev->add_option("--iters", ea.iters, "Network iterations");
  ev->add_option("--seed", ea.seed, "Seed");
  ev->add_option("--degree", ea.degree, "Report P-values for d-regular Max-Cut instances");
  ev->add_option("--flips", ea.flips, "Local search flips (default 100 n)");
  ev->add_option("--jobs", ea.jobs, "Instances evaluated in parallel (default $RUNCSP_JOBS or 1)");

  GradcheckArgs gc;
  auto* gr = app.add_subcommand("gradcheck", "Compare loss gradients with central finite differences");
  gr->add_option("--problem", gc.problem, "max2sat | maxcut | 3col | maxis | kcol:<d>")->required();
  gr->add_option("--k", gc.k, "State size");
  gr->add_option("--t", gc.t, "Iterations");
  gr->add_option("--instances", gc.instances, "Random instances");
  gr->add_option("--n", gc.max_n, "Maximum variables");
  gr->add_option("--m", gc.max_m, "Maximum constraints");
  gr->add_option("--tol", gc.tol, "Relative error tolerance");
  gr->add_option("--seed", gc.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  ta.seed_set = seed_opt->count() > 0;

  try {
    if (gen->parsed()) return run_generate(ga);
    if (tr->parsed()) return run_train(ta);
    if (so->parsed()) return run_solve(sa);
    if (ev->parsed()) return run_evaluate(ea);
    if (gr->parsed()) return run_gradcheck(gc);
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
