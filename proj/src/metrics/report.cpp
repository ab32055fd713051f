#include "unifront/metrics/report.hpp"

#include <fstream>
#include <istream>

#include <json.hpp>

#include "unifront/error.hpp"

namespace unifront {

std::string format_record(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["locale"] = r.locale;
  j["test_set"] = r.test_set;
  j["metric"] = r.metric;
  if (r.value) j["value"] = *r.value;
  else j["value"] = nullptr;
  j["evaluated"] = r.evaluated;
  j["skipped"] = r.skipped;
  return j.dump();
}

EvalRecord parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad report record: ") + e.what());
  }
  EvalRecord r;
  try {
    r.locale = j.at("locale").get<std::string>();
    r.test_set = j.at("test_set").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    if (!j.at("value").is_null()) r.value = j.at("value").get<double>();
    r.evaluated = j.value("evaluated", std::size_t{0});
    r.skipped = j.value("skipped", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad report record: ") + e.what());
  }
  return r;
}

std::string format_report(const std::vector<EvalRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

std::vector<EvalRecord> read_report(std::istream& in) {
  std::vector<EvalRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

std::vector<EvalRecord> read_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open report " + path);
  return read_report(in);
}

}  // namespace unifront
