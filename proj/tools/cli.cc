// Copyright 2026 The Proxy Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "proxy_audit/dataset.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/model.h"
#include "proxy_audit/oracle.h"
#include "proxy_audit/repair.h"
#include "proxy_audit/report.h"
#include "proxy_audit/service.h"
#include "proxy_audit/session.h"
#include "proxy_audit/syntax.h"
#include "proxy_audit/validity.h"

namespace proxy_audit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Inputs {
  std::string model;
  std::string data;
  std::string protected_column;
  std::string label;
  int bins = 10;
  double epsilon = 0.5;
  double delta = 0.1;
  uint64_t seed = 0;
  std::string estimator = "exact";
  double alpha = 0.05;
  double beta = 0.05;
  int max_subset = 3;
  std::string out;
};

struct Loaded {
  Program program;
  Population pop;
  DetectionConfig cfg;
};

void AddInputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--model", in.model, "Model document (JSON)")->required();
  cmd->add_option("--data", in.data, "Population CSV")->required();
  cmd->add_option("--protected", in.protected_column, "Protected column")
      ->required();
  cmd->add_option("--label", in.label, "Label column");
  cmd->add_option("--bins", in.bins, "Quantile bins for continuous values")
      ->check(CLI::Range(2, 1000));
  cmd->add_option("--epsilon", in.epsilon, "Association threshold")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--delta", in.delta, "Influence threshold")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", in.seed, "Seed for every random choice");
  cmd->add_option("--estimator", in.estimator, "Influence estimator")
      ->check(CLI::IsMember({"exact", "sampled"}));
  cmd->add_option("--alpha", in.alpha, "Sampled-estimator error bound");
  cmd->add_option("--beta", in.beta, "Sampled-estimator failure probability");
  cmd->add_option("--max-subset", in.max_subset,
                  "Largest operand subset considered")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", in.out, "Output directory");
}

std::optional<std::string> Label(const Inputs& in) {
  if (in.label.empty()) return std::nullopt;
  return in.label;
}

absl::StatusOr<Loaded> Load(const Inputs& in) {
  absl::StatusOr<Program> p = LoadModel(in.model);
  if (!p.ok()) return p.status();
  absl::StatusOr<Population> pop = LoadCsv(in.data, in.protected_column, Label(in));
  if (!pop.ok()) return pop.status();
  DetectionConfig cfg;
  cfg.epsilon = in.epsilon;
  cfg.delta = in.delta;
  cfg.measure.bins = in.bins;
  cfg.limits.max_subset_size = in.max_subset;
  cfg.estimator = in.estimator == "sampled" ? Estimator::kSampled : Estimator::kExact;
  cfg.sampling = {in.alpha, in.beta, in.seed};
  for (const Param& param : p->params()) {
    if (param.name == in.protected_column) cfg.measure.allow_protected = true;
  }
  absl::Status valid = ValidateConfig(cfg);
  if (!valid.ok()) return valid;
  return Loaded{*std::move(p), *std::move(pop), cfg};
}

int Fail(std::ostream& err, const absl::Status& s) {
  err << "proxy-audit: " << s.message() << "\n";
  return kInputError;
}

absl::Status WriteText(const std::string& dir, const std::string& name,
                       const std::string& text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(fs::path(dir) / name, std::ios::binary);
  f << text;
  f.close();
  if (!f) {
    return absl::InternalError("cannot write " + (fs::path(dir) / name).string());
  }
  return absl::OkStatus();
}

absl::Status WriteAll(const std::string& dir,
                      const std::vector<std::pair<std::string, std::string>>& files) {
  for (const auto& [name, text] : files) {
    absl::Status st = WriteText(dir, name, text);
    if (!st.ok()) return st;
  }
  return absl::OkStatus();
}

void PrintWitnesses(std::ostream& out, const std::vector<Witness>& ws) {
  for (const Witness& w : ws) {
    out << "witness " << w.fingerprint.substr(0, 12) << " d="
        << RoundMeasure(w.association) << " i=" << RoundMeasure(w.influence);
    out << " at";
    for (const Position& q : w.positions) out << " " << q.ToString();
    out << ": " << w.p1_text << "\n";
  }
}

json WitnessArray(const std::vector<Witness>& ws) {
  json out = json::array();
  for (const Witness& w : ws) out.push_back(ToJson(w));
  return out;
}

// Detect -----------------------------------------------------------------

struct DetectFlags {
  int folds = 0;
  int min_folds = 0;
  size_t bootstrap = 0;
  double alpha_sig = 0.05;
  std::string session_root;
};

int Detect(const Inputs& in, const DetectFlags& flags, std::ostream& out,
           std::ostream& err) {
  absl::StatusOr<Loaded> l = Load(in);
  if (!l.ok()) return Fail(err, l.status());
  DetectionConfig cfg = l->cfg;
  cfg.measure_all_influences = true;
  absl::StatusOr<DetectionResult> r = ProxyDetect(l->program, l->pop, cfg);
  if (!r.ok()) return Fail(err, r.status());
  std::vector<Witness> witnesses = r->witnesses;

  json extra = json::object();
  if (flags.folds > 0) {
    ValidityConfig val;
    val.folds = flags.folds;
    val.accept_threshold = flags.min_folds > 0 ? flags.min_folds : flags.folds;
    val.seed = in.seed;
    absl::StatusOr<std::vector<ValidatedWitness>> cv =
        CrossValidatedDetect(l->program, l->pop, l->cfg, val);
    if (!cv.ok()) return Fail(err, cv.status());
    witnesses.clear();
    json counts = json::object();
    for (const ValidatedWitness& v : *cv) {
      witnesses.push_back(v.witness);
      counts[v.witness.fingerprint] = v.appearances;
    }
    extra["fold_appearances"] = counts;
  }
  if (flags.bootstrap > 0) {
    std::vector<BootstrapResult> raw;
    for (size_t i = 0; i < witnesses.size(); ++i) {
      absl::StatusOr<BootstrapResult> b =
          BootstrapPValue(witnesses[i].decomposition.p1, l->pop, flags.bootstrap,
                          in.seed + i, l->cfg.measure);
      if (!b.ok()) return Fail(err, b.status());
      raw.push_back(*b);
    }
    absl::StatusOr<std::vector<BootstrapResult>> adj = BonferroniAdjust(
        raw, std::max(r->stats.decomposition_count, raw.size()), flags.alpha_sig);
    if (!adj.ok()) return Fail(err, adj.status());
    std::vector<Witness> kept;
    json pvalues = json::object();
    for (size_t i = 0; i < witnesses.size(); ++i) {
      pvalues[witnesses[i].fingerprint] = {{"raw_p", (*adj)[i].raw_p},
                                           {"adjusted_p", (*adj)[i].adjusted_p}};
      if ((*adj)[i].accepted) kept.push_back(witnesses[i]);
    }
    witnesses = std::move(kept);
    extra["p_values"] = pvalues;
  }

  PrintWitnesses(out, witnesses);
  out << witnesses.size() << " witness" << (witnesses.size() == 1 ? "" : "es")
      << " among " << r->stats.decomposition_count << " decompositions"
      << (r->stats.incomplete ? " (enumeration incomplete)" : "") << "\n";

  if (!in.out.empty()) {
    json stats = ToJson(r->stats);
    stats.update(extra);
    absl::Status st = WriteAll(
        in.out,
        {{"witnesses.json", WitnessArray(witnesses).dump(2) + "\n"},
         {"subexpressions.csv",
          SubexpressionCsv(r->subexpressions, cfg.epsilon, cfg.delta)},
         {"subexpressions.json",
          SubexpressionReport(r->subexpressions, cfg.epsilon, cfg.delta).dump(2) +
              "\n"},
         {"stats.json", stats.dump(2) + "\n"}});
    if (!st.ok()) return Fail(err, st);
  }
  if (!flags.session_root.empty()) {
    SessionSpec spec{in.model, in.data, in.protected_column, Label(in),
                     in.epsilon, in.delta, in.bins, in.seed};
    absl::StatusOr<std::unique_ptr<Session>> s =
        Session::Create(flags.session_root, spec);
    if (!s.ok()) return Fail(err, s.status());
    out << "session " << (*s)->dir() << "\n";
  }
  return witnesses.empty() ? kClean : kViolations;
}

// Repair -----------------------------------------------------------------

struct RepairFlags {
  std::string policy;
  bool interactive = false;
  std::string undecided;
  std::string session_root;
  std::string resume;
};

absl::StatusOr<UndecidedPolicy> ParseUndecided(const std::string& s) {
  if (s.empty() || s == "suspend") return UndecidedPolicy::kSuspend;
  if (s == "approve") return UndecidedPolicy::kApprove;
  if (s == "deny") return UndecidedPolicy::kDeny;
  return absl::InvalidArgumentError("--undecided takes approve or deny");
}

int WriteRepair(const std::string& dir, const Program& original,
                const RepairOutcome& r, std::ostream& out, std::ostream& err) {
  out << r.edits.size() << " edit" << (r.edits.size() == 1 ? "" : "s") << " in "
      << r.iterations << " iteration" << (r.iterations == 1 ? "" : "s") << "\n";
  for (const Edit& e : r.edits) {
    out << "  ";
    for (const Position& q : e.positions) out << q.ToString() << " ";
    out << e.before << " -> " << e.after << "\n";
  }
  if (dir.empty()) {
    out << Print(r.repaired) << "\n";
    return kClean;
  }
  json edits = json::array();
  for (const Edit& e : r.edits) edits.push_back(ToJson(e));
  json report = {{"iterations", r.iterations},
                 {"suspended", r.suspended},
                 {"residual_witnesses", WitnessArray(r.residual_witnesses)},
                 {"pending", WitnessArray(r.pending)}};
  absl::Status st = WriteAll(
      dir, {{"repaired.txt", Print(r.repaired) + "\n"},
            {"repaired.json", ModelDocument(r.repaired).dump(2) + "\n"},
            {"edits.json", edits.dump(2) + "\n"},
            {"diff.txt", ProgramDiff(original, r.edits, r.repaired)},
            {"report.json", report.dump(2) + "\n"}});
  if (!st.ok()) return Fail(err, st);
  return kClean;
}

std::optional<Verdict> Ask(const Witness& w, std::istream& in,
                           std::ostream& err) {
  for (;;) {
    err << "witness d=" << RoundMeasure(w.association)
        << " i=" << RoundMeasure(w.influence) << ": " << w.p1_text
        << "\n  [a]pprove, [d]eny, [s]kip? " << std::flush;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    if (line == "a" || line == "approve" || line == "appropriate") {
      return Verdict::kAppropriate;
    }
    if (line == "d" || line == "deny" || line == "inappropriate") {
      return Verdict::kInappropriate;
    }
    if (line == "s" || line == "skip") return Verdict::kUndecided;
  }
}

int RepairInteractive(const Inputs& inputs, const RepairFlags& flags,
                      std::istream& in, std::ostream& out, std::ostream& err) {
  const std::string root =
      !flags.session_root.empty()
          ? flags.session_root
          : (fs::path(inputs.out.empty() ? "." : inputs.out) / "sessions").string();
  absl::StatusOr<std::unique_ptr<Session>> s;
  if (!flags.resume.empty()) {
    s = Session::Open(root, flags.resume);
  } else {
    SessionSpec spec{inputs.model,   inputs.data,  inputs.protected_column,
                     Label(inputs),  inputs.epsilon, inputs.delta,
                     inputs.bins,    inputs.seed};
    s = Session::Create(root, spec);
  }
  if (!s.ok()) return Fail(err, s.status());
  Session& session = **s;
  for (;;) {
    absl::StatusOr<RepairOutcome> r = session.Repair(UndecidedPolicy::kSuspend);
    if (!r.ok()) return Fail(err, r.status());
    if (!r->suspended) {
      RepairOutcome total = *std::move(r);
      total.edits = session.edits();
      return WriteRepair(inputs.out, session.original(), total, out, err);
    }
    bool answered = false;
    for (const Witness& w : r->pending) {
      std::optional<Verdict> v = Ask(w, in, err);
      if (!v) break;
      if (*v == Verdict::kUndecided) continue;
      Judgment j;
      j.fingerprint = w.fingerprint;
      j.verdict = *v;
      absl::Status st = session.RecordJudgment(j);
      if (!st.ok()) return Fail(err, st);
      answered = true;
    }
    if (!answered) {
      err << "suspended; resume with --resume " << session.id()
          << " --session " << root << "\n";
      out << "session " << session.dir() << "\n";
      return kSuspended;
    }
  }
}

int Repair(const Inputs& inputs, const RepairFlags& flags, std::istream& in,
           std::ostream& out, std::ostream& err) {
  absl::StatusOr<UndecidedPolicy> undecided = ParseUndecided(flags.undecided);
  if (!undecided.ok()) return Fail(err, undecided.status());
  if (flags.interactive) return RepairInteractive(inputs, flags, in, out, err);

  absl::StatusOr<Loaded> l = Load(inputs);
  if (!l.ok()) return Fail(err, l.status());
  std::optional<Policy> policy;
  if (!flags.policy.empty()) {
    absl::StatusOr<Policy> p = Policy::Load(flags.policy);
    if (!p.ok()) return Fail(err, p.status());
    policy = *std::move(p);
  }
  absl::StatusOr<Utility> v =
      DefaultUtility(l->program, l->pop, l->cfg.measure.allow_protected);
  if (!v.ok()) return Fail(err, v.status());
  const Policy* pp = policy ? &*policy : nullptr;
  absl::StatusOr<RepairOutcome> r = RepairLoop(
      l->program, l->pop, l->cfg,
      [pp](const Witness& w) { return Judge(w, nullptr, pp); }, *v, *undecided);
  if (!r.ok()) return Fail(err, r.status());
  const int code = WriteRepair(inputs.out, l->program, *r, out, err);
  if (code != kClean) return code;
  if (r->suspended) {
    err << r->pending.size()
        << " undecided witnesses; pass --undecided=approve|deny or --interactive\n";
    return kSuspended;
  }
  return kClean;
}

// Report, translate, serve -----------------------------------------------

int Report(const std::string& session_dir, const std::string& dir,
           const std::string& format, std::ostream& out, std::ostream& err) {
  fs::path path = fs::path(session_dir).lexically_normal();
  if (path.filename().empty()) path = path.parent_path();
  absl::StatusOr<std::unique_ptr<Session>> s =
      Session::Open(path.parent_path().string(), path.filename().string());
  if (!s.ok()) return Fail(err, s.status());
  const SessionSpec& spec = (*s)->spec();
  const std::vector<SubexprRecord> records = (*s)->subexpressions();
  const std::string csv = SubexpressionCsv(records, spec.epsilon, spec.delta);
  const std::string doc =
      SubexpressionReport(records, spec.epsilon, spec.delta).dump(2) + "\n";
  if (dir.empty()) {
    out << (format == "json" ? doc : csv);
    return kClean;
  }
  absl::Status st =
      WriteAll(dir, {{"subexpressions.csv", csv}, {"subexpressions.json", doc}});
  if (!st.ok()) return Fail(err, st);
  return kClean;
}

int Translate(const std::string& model, const std::string& format,
              std::ostream& out, std::ostream& err) {
  absl::StatusOr<Program> p = LoadModel(model);
  if (!p.ok()) return Fail(err, p.status());
  if (format == "json") {
    out << ExpressionDocument(*p).dump(2) << "\n";
  } else {
    out << Print(*p) << "\n";
  }
  return kClean;
}

struct ServeFlags {
  std::string root = "sessions";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string policy;
  std::string undecided;
};

int Serve(const ServeFlags& flags, std::ostream& err) {
  ServiceOptions options;
  options.session_root = flags.root;
  options.host = flags.host;
  options.port = flags.port;
  if (const char* token = std::getenv("PROXY_AUDIT_TOKEN"); token && *token) {
    options.token = token;
  }
  absl::StatusOr<UndecidedPolicy> undecided = ParseUndecided(flags.undecided);
  if (!undecided.ok()) return Fail(err, undecided.status());
  options.undecided = *undecided;
  if (!flags.policy.empty()) {
    absl::StatusOr<Policy> p = Policy::Load(flags.policy);
    if (!p.ok()) return Fail(err, p.status());
    options.policy = *std::move(p);
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ReviewService service(options);
  absl::StatusOr<int> port = service.Bind();
  if (!port.ok()) return Fail(err, port.status());
  err << "listening on http://" << flags.host << ":" << *port << "\n"
      << std::flush;
  std::thread stopper([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.Stop();
  });
  service.Serve();
  // Serve can also end without a signal; wake the waiter.
  pthread_kill(stopper.native_handle(), SIGTERM);
  stopper.join();
  return kClean;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::istream& in,
           std::ostream& out, std::ostream& err) {
  CLI::App app("Detects and repairs proxy use of a protected attribute in "
               "machine-learnt models.",
               "proxy-audit");
  app.require_subcommand(1);

  Inputs detect_in;
  DetectFlags detect_flags;
  CLI::App* detect = app.add_subcommand("detect", "Find proxy-use witnesses");
  AddInputs(detect, detect_in);
  detect->add_option("--folds", detect_flags.folds,
                     "Cross-validate over this many folds");
  detect->add_option("--min-folds", detect_flags.min_folds,
                     "Folds a witness must validate in (default: all)");
  detect->add_option("--bootstrap", detect_flags.bootstrap,
                     "Permutation samples for association p-values");
  detect->add_option("--alpha-sig", detect_flags.alpha_sig,
                     "Family-wise significance level");
  detect->add_option("--session", detect_flags.session_root,
                     "Also record a review session under this directory");

  Inputs repair_in;
  RepairFlags repair_flags;
  CLI::App* repair = app.add_subcommand("repair", "Repair denied proxy uses");
  AddInputs(repair, repair_in);
  repair->add_option("--policy", repair_flags.policy, "Judgment policy (JSON)");
  repair->add_flag("--interactive", repair_flags.interactive,
                   "Ask for a verdict on each undecided witness");
  repair->add_option("--undecided", repair_flags.undecided,
                     "Verdict for witnesses the policy leaves undecided")
      ->check(CLI::IsMember({"approve", "deny"}));
  repair->add_option("--session", repair_flags.session_root,
                     "Session directory root for interactive runs");
  repair->add_option("--resume", repair_flags.resume,
                     "Resume a suspended interactive session by id");

  std::string report_session, report_out, report_format = "csv";
  CLI::App* report = app.add_subcommand("report", "Subexpression scatter data");
  report->add_option("--session", report_session, "Session directory")->required();
  report->add_option("--out", report_out, "Output directory");
  report->add_option("--format", report_format, "stdout format")
      ->check(CLI::IsMember({"csv", "json"}));

  ServeFlags serve_flags;
  CLI::App* serve = app.add_subcommand("serve", "Run the local review service");
  serve->add_option("--session", serve_flags.root, "Session root directory");
  serve->add_option("--host", serve_flags.host, "Bind address");
  serve->add_option("--port", serve_flags.port, "Port (0 picks one)");
  serve->add_option("--policy", serve_flags.policy, "Judgment policy (JSON)");
  serve->add_option("--undecided", serve_flags.undecided,
                    "Verdict for undecided witnesses during repair")
      ->check(CLI::IsMember({"approve", "deny"}));

  std::string translate_model, translate_format = "text";
  CLI::App* translate = app.add_subcommand("translate", "Print a model as a program");
  translate->add_option("--model", translate_model, "Model document")->required();
  translate->add_option("--format", translate_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kClean : kInputError;
  }

  if (*detect) return Detect(detect_in, detect_flags, out, err);
  if (*repair) return Repair(repair_in, repair_flags, in, out, err);
  if (*report) return Report(report_session, report_out, report_format, out, err);
  if (*serve) return Serve(serve_flags, err);
  return Translate(translate_model, translate_format, out, err);
}

}  // namespace proxy_audit::cli
