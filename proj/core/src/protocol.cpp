// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <fstream>
#include <sstream>

#include "f0spoof/dataio.hpp"

namespace f0spoof {

Protocol parse_protocol(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("protocol: cannot open '" + path.string() + "'");
  Protocol proto;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string speaker, utt, dash, system, key;
    if (!(ss >> speaker)) continue;  // blank line
    if (!(ss >> utt >> dash >> system >> key))
      throw DataError("protocol: malformed line " + std::to_string(lineno) + " in '" +
                      path.string() + "': expected 5 fields");
    std::string extra;
    if (ss >> extra)
      throw DataError("protocol: trailing tokens on line " + std::to_string(lineno) + " in '" +
                      path.string() + "'");
    ProtocolEntry e;
    e.speaker_id = speaker;
    e.utt_id = utt;
    e.system_id = system;
    if (key == "bonafide")
      e.key = Key::Bonafide;
    else if (key == "spoof")
      e.key = Key::Spoof;
    else
      throw DataError("protocol: unknown key token '" + key + "' on line " +
                      std::to_string(lineno) + " in '" + path.string() + "'");
    if ((e.key == Key::Bonafide) != (e.system_id == "-"))
      throw DataError("protocol: key/system mismatch on line " + std::to_string(lineno) + " in '" +
                      path.string() + "' (bonafide entries must use system '-')");
    if (e.key == Key::Bonafide)
      ++proto.bonafide_count;
    else
      ++proto.spoof_count;
    proto.entries.push_back(std::move(e));
  }
  return proto;
}

void write_protocol(const std::filesystem::path& path, const std::vector<ProtocolEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw DataError("protocol: cannot write '" + path.string() + "'");
  for (const auto& e : entries)
    os << e.speaker_id << ' ' << e.utt_id << " - " << e.system_id << ' ' << key_name(e.key)
       << '\n';
  if (!os) throw DataError("protocol: short write to '" + path.string() + "'");
}

}  // namespace f0spoof
