#pragma once

namespace thoughttree::prompts {

// Annotator prompt templates, embedded verbatim from assets/prompts/.
extern const char* const kExtractSketch;      // placeholder: {{text}}
extern const char* const kAssignSteps;        // placeholders: {{reasoning_step}}, {{thoughts}}
extern const char* const kIdentifyFunction;   // placeholders: {TEXT1}, {TEXT2}

}  // namespace thoughttree::prompts
