#pragma once

#include <iosfwd>

#include "thoughttree/llm_client.hpp"

namespace thoughttree {

struct CliHooks {
  // Used by `annotate` instead of the HTTP client built from the environment.
  LlmClient* upstream = nullptr;
};

// Entry point of the `thoughttree` command. Results go to `out`; failures
// print one JSON object {"error": <code>, "message": ...} to `err` and return
// non-zero (1 for runtime errors, 2 for usage errors).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const CliHooks& hooks = {});

// Scores are rounded to 8 decimals before they are written so that outputs
// stay byte-identical across math libraries.
double round_score(double score);

}  // namespace thoughttree
