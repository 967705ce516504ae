#include "nlcap/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nlcap/errors.hpp"

namespace nlcap::io {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name) {
  if (!doc.is_object()) throw ParseError("expected a JSON object");
  const auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("missing field \"") + name + "\"");
  return *it;
}

int count_field(const json& doc, const char* name) {
  const json& v = field(doc, name);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw ParseError(std::string("field \"") + name + "\" must be a positive integer");
  return v.get<int>();
}

const json& array_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n)
    throw ParseError("\"" + where + "\" must be an array of length " + std::to_string(n));
  return v;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError("\"" + where + "\" must contain numbers");
  return v.get<double>();
}

}  // namespace

json box_to_json(const NSBox& box) {
  const auto& sh = box.shape();
  json p = json::array();
  for (int a = 0; a < sh.nA; ++a) {
    json pa = json::array();
    for (int b = 0; b < sh.nB; ++b) {
      json pb = json::array();
      for (int r = 0; r < sh.nR; ++r) {
        json pr = json::array();
        for (int s = 0; s < sh.nS; ++s) pr.push_back(box(a, b, r, s));
        pb.push_back(std::move(pr));
      }
      pa.push_back(std::move(pb));
    }
    p.push_back(std::move(pa));
  }
  json doc;
  if (!box.name().empty()) doc["name"] = box.name();
  doc["nA"] = sh.nA;
  doc["nB"] = sh.nB;
  doc["nR"] = sh.nR;
  doc["nS"] = sh.nS;
  doc["P"] = std::move(p);
  return doc;
}

NSBox box_from_json(const json& doc) {
  BoxShape sh{count_field(doc, "nA"), count_field(doc, "nB"),
              count_field(doc, "nR"), count_field(doc, "nS")};
  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ParseError("field \"name\" must be a string");
    name = doc["name"].get<std::string>();
  }
  const json& p = array_of(field(doc, "P"), sh.nA, "P");
  std::vector<double> flat;
  flat.reserve(sh.size());
  for (const auto& pa : p)
    for (const auto& pb : array_of(pa, sh.nB, "P[a]"))
      for (const auto& pr : array_of(pb, sh.nR, "P[a][b]"))
        for (const auto& v : array_of(pr, sh.nS, "P[a][b][r]"))
          flat.push_back(number(v, "P"));
  return NSBox(sh, std::move(flat), std::move(name));
}

json hvbox_to_json(const HVBox& hv) {
  json doc;
  doc["P_r_given_a"] = hv.alice_marginal();
  doc["nB"] = hv.space().length();
  doc["nS"] = hv.space().alphabet();
  json blocks = json::array();
  for (const auto& blk : hv.blocks())
    blocks.push_back({{"r", blk.r}, {"a", blk.a}, {"sigma", blk.sigma}});
  doc["blocks"] = std::move(blocks);
  return doc;
}

HVBox hvbox_from_json(const json& doc) {
  const int nB = count_field(doc, "nB");
  const int nS = count_field(doc, "nS");
  SequenceSpace space(nB, nS);
  const json& pra = field(doc, "P_r_given_a");
  if (!pra.is_array() || pra.empty())
    throw ParseError("\"P_r_given_a\" must be a non-empty array");
  std::vector<std::vector<double>> alice;
  for (const auto& row : pra) {
    if (!row.is_array() || row.empty())
      throw ParseError("\"P_r_given_a\" rows must be non-empty arrays");
    std::vector<double> r;
    for (const auto& v : row) r.push_back(number(v, "P_r_given_a"));
    alice.push_back(std::move(r));
  }
  const json& blocks = field(doc, "blocks");
  if (!blocks.is_array()) throw ParseError("\"blocks\" must be an array");
  std::vector<HVBlock> out;
  for (const auto& b : blocks) {
    HVBlock blk;
    const json& r = field(b, "r");
    const json& a = field(b, "a");
    if (!r.is_number_integer() || !a.is_number_integer())
      throw ParseError("block \"r\" and \"a\" must be integers");
    blk.r = r.get<int>();
    blk.a = a.get<int>();
    for (const auto& v : array_of(field(b, "sigma"), space.size(), "sigma"))
      blk.sigma.push_back(number(v, "sigma"));
    out.push_back(std::move(blk));
  }
  return HVBox(std::move(alice), std::move(space), std::move(out));
}

json report_to_json(const SolverReport& rep) {
  const auto ss = single_shot_bounds(std::max(0.0, rep.D_bits));
  json doc;
  doc["D_bits"] = rep.D_bits;
  doc["feas_residual"] = rep.feas_residual;
  doc["inner_gap_bits"] = rep.inner_gap_bits;
  doc["initial_bits"] = rep.initial_bits;
  doc["iterations"] = rep.iterations;
  doc["converged"] = rep.converged;
  doc["seed"] = rep.seed;
  doc["single_shot"] = {{"lower", ss.lower}, {"upper", ss.upper}};
  doc["p_star"] = rep.p_star;
  doc["history"] = rep.history;
  return doc;
}

std::string dump(const json& doc) { return doc.dump(1) + "\n"; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace nlcap::io
