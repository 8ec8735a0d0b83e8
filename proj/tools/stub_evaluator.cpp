// Reference evaluator for the line-JSON protocol: score = -len(smiles).
// Flags inject the failure modes the client must tolerate.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stub evaluator"};
  int reverse = 0;
  long drop_every = 0;
  bool malformed = false;
  bool no_score = false;
  double delay = 0.0;
  long exit_after = 0;
  std::optional<double> constant;
  long error_every = 0;
  app.add_option("--reverse", reverse, "buffer N requests and answer them in reverse order");
  app.add_option("--drop-every", drop_every, "never answer every K-th request (1-based)");
  app.add_flag("--malformed", malformed, "emit a garbage line before every answer");
  app.add_flag("--no-score", no_score, "answer with objects lacking both score and error");
  app.add_option("--delay", delay, "seconds to sleep before each answer");
  app.add_option("--exit-after", exit_after, "exit after reading N requests");
  app.add_option("--constant", constant, "answer this score for every molecule");
  app.add_option("--error-every", error_every, "answer an error for every K-th request (1-based)");
  CLI11_PARSE(app, argc, argv);

  std::vector<nlohmann::json> held;
  auto answer = [&](const nlohmann::json& out) {
    if (delay > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    if (malformed) std::cout << "this is not json\n";
    std::cout << out.dump() << '\n';
  };
  auto flush_held = [&]() {
    for (auto it = held.rbegin(); it != held.rend(); ++it) answer(*it);
    held.clear();
    std::cout.flush();
  };

  std::string line;
  long seen = 0;
  while (std::getline(std::cin, line)) {
    nlohmann::json req = nlohmann::json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.contains("id")) continue;
    ++seen;
    nlohmann::json out = {{"id", req["id"]}};
    std::string smiles = req.value("smiles", "");
    if (drop_every > 0 && seen % drop_every == 0) {
      // dropped
    } else {
      if (no_score) {
        out["note"] = "nothing";
      } else if (error_every > 0 && seen % error_every == 0) {
        out["error"] = "refused " + smiles;
      } else {
        out["score"] = constant ? *constant : -static_cast<double>(smiles.size());
      }
      if (reverse > 0) {
        held.push_back(out);
        if (static_cast<int>(held.size()) >= reverse) flush_held();
      } else {
        answer(out);
        std::cout.flush();
      }
    }
    if (exit_after > 0 && seen >= exit_after) {
      flush_held();
      return 0;
    }
  }
  flush_held();
  return 0;
}
