#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace olab::commands {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGate = 3;
inline constexpr int kExitNumerical = 4;

struct Options {
  std::string config;                   // --config
  std::string out;                      // --out (overrides the config output path)
  std::optional<int> threads;           // --threads
  std::optional<std::uint64_t> seed;    // --seed (overrides the config seed)
  std::string input;                    // compare: Monte Carlo CSV; plot: any CSV
  std::string theory;                   // compare: theoretical CSV
};

/// Each command returns kExitOk or kExitGate and throws ConfigError or
/// NumericalError for the other outcomes. Summaries go to `log`.
int simulate(const Options& opt, std::ostream& log);
int predict(const Options& opt, std::ostream& log);
int compare(const Options& opt, std::ostream& log);
int lidskii(const Options& opt, std::ostream& log);
int clt(const Options& opt, std::ostream& log);
int plot(const Options& opt, std::ostream& log);

/// Runs `fn` and maps exceptions to exit codes, printing the message to `err`.
int run_guarded(int (*fn)(const Options&, std::ostream&), const Options& opt, std::ostream& log,
                std::ostream& err);

}  // namespace olab::commands
