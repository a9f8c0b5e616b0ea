#pragma once

// Loading corpora from disk in any supported format.

#include "eventshift/corpus/formats.h"

#include <filesystem>
#include <string>

namespace eventshift::corpus {

enum class InputFormat { kAuto, kJsonl, kBrat, kTimeml };

InputFormat input_format_from_string(const std::string& s);

// Accepts a canonical .jsonl file, a BRAT .ann file (its .txt alongside),
// a TimeML .tml/.xml file, or a directory of BRAT pairs or TimeML files.
// Directory entries are read in file-name order; doc ids are file stems.
Corpus load_corpus(const std::filesystem::path& path, InputFormat format = InputFormat::kAuto,
                   const std::string& domain = "", Split split = Split::kTrain, ParseDiagnostics* diag = nullptr);

}  // namespace eventshift::corpus
