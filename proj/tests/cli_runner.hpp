#pragma once

// Runs the command-line tool in scratch directories and compares what it
// writes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace gapfill::testing {

namespace fs = std::filesystem;

inline int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" GAPFILL_CLI "' " + args + " >cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All files of a directory except the captured console log.
inline std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename() == "cli.log") continue;
    out[entry.path().filename().string()] = slurp(entry.path());
  }
  return out;
}

// One invocation per subcommand; later steps read the files earlier ones
// wrote.
inline std::vector<std::pair<std::string, std::string>> cli_pipeline() {
  return {
      {"simulate-renewal",
       "simulate-renewal --lambda 4 --alpha 2 --t-end 6 --t1 2 --t2 3 --seed 3 "
       "--manifest m_sim.json"},
      {"bias-study naive", "bias-study --reps 5 --seed 5 --out bias_naive.csv "
                           "--replicates reps_naive.csv --manifest m_bias_naive.json"},
      {"bias-study mcml",
       "bias-study --estimator mcml --reps 2 --n-samples 40 --burn-in 50 --thin 10 "
       "--newton-steps 2 --threads 2 --seed 5 --out bias_mcml.csv --replicates reps_mcml.csv "
       "--manifest m_bias_mcml.json"},
      {"mcmle",
       "mcmle --data events.csv --t1 2 --t2 3 --t-end 6 --n-samples 300 --burn-in 100 "
       "--thin 10 --newton-steps 2 --grid-points 21 --seed 4 --manifest m_mcmle.json"},
      {"state-sample mh",
       "state-sample --data events.csv --t1 2 --t2 3 --t-end 6 --lambda 4 --n-samples 30 "
       "--burn-in 100 --thin 10 --seed 8 --out mh.csv --manifest m_mh.json"},
      {"state-sample bd",
       "state-sample --sampler bd --data events.csv --t1 2 --t2 3 --t-end 6 --lambda 4 "
       "--n-samples 30 --burn-in 100 --spacing 1 --seed 8 --out bd.csv --manifest m_bd.json"},
      {"state-sample pairwise",
       "state-sample --model pairwise --sampler bd --data events.csv --t1 2 --t2 3 --t-end 6 "
       "--beta1 2 --gamma 0.5 --range 0.2 --n-samples 30 --burn-in 100 --seed 8 "
       "--out pw.csv --manifest m_pw.json"},
      {"cox-compound",
       "cox-compound --lambda1 1 --lambda2 3 --t1 2 --t2 3 --t-end 6 --n-observed 9 "
       "--manifest m_cox.json"},
      {"lgcp simulate", "lgcp simulate --seed 6 --manifest m_lsim.json"},
      {"lgcp fit-mu0", "lgcp fit-mu0 --counts counts.csv --manifest m_lfit.json"},
      {"lgcp fit-mu0 naive",
       "lgcp fit-mu0 --counts counts.csv --naive --out mu0_naive.json --weekly weekly_naive.csv "
       "--manifest m_lfit_naive.json"},
      {"lgcp mincontrast",
       "lgcp mincontrast --counts counts.csv --mu0 mu0.json --manifest m_lmc.json"},
      {"lgcp state",
       "lgcp state --counts counts.csv --mu0 mu0.json --steps 200 --thin 5 --n-samples 20 "
       "--seed 7 --manifest m_lstate.json"},
  };
}

struct DeterminismReport {
  bool ok = true;
  std::vector<std::string> problems;
};

inline DeterminismReport check_cli_determinism(const fs::path& root) {
  DeterminismReport report;
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  for (const auto& [name, args] : cli_pipeline()) {
    const auto before = directory_contents(a);
    const int ca = run_cli(a, args);
    const int cb = run_cli(b, args);
    if (ca != 0 || cb != 0) {
      report.ok = false;
      report.problems.push_back(name + ": exit codes " + std::to_string(ca) + ", " + std::to_string(cb) +
                                ": " + slurp(a / "cli.log"));
      continue;
    }
    const auto after = directory_contents(a);
    if (after.size() <= before.size()) {
      report.ok = false;
      report.problems.push_back(name + ": wrote no new files");
    }
  }
  const auto fa = directory_contents(a), fb = directory_contents(b);
  if (fa != fb) {
    report.ok = false;
    for (const auto& [file, bytes] : fa) {
      const auto it = fb.find(file);
      if (it == fb.end() || it->second != bytes) report.problems.push_back(file + " differs");
    }
  }
  return report;
}

}  // namespace gapfill::testing
