#include "plmf/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "plmf/error.hpp"

namespace plmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

template <typename T>
void write_array(const fs::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

template <typename T>
std::vector<T> read_array(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::vector<T> values(expected);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(T)))
    throw Error(Errc::io_error, path.string() + " holds fewer than " + std::to_string(expected) + " values");
  return values;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json filter_json(const WaveletFilter& f) {
  return {{"family", f.family}, {"vanishing_moments", f.vanishing_moments}, {"lowpass", f.lowpass}};
}

WaveletFilter filter_from_json(const json& j) {
  WaveletFilter f;
  f.family = j.at("family").get<std::string>();
  f.vanishing_moments = j.at("vanishing_moments").get<int>();
  f.lowpass = j.at("lowpass").get<std::vector<double>>();
  return f;
}

}  // namespace

Field2d Dataset::field() const {
  if (dimension != 2) throw Error(Errc::invalid_input, "dataset is not two-dimensional");
  Field2d f;
  f.side = side;
  f.values = values;
  return f;
}

Dataset make_dataset(std::span<const double> signal) {
  Dataset d;
  d.values.assign(signal.begin(), signal.end());
  return d;
}

Dataset make_dataset(const Field2d& field) {
  Dataset d;
  d.dimension = 2;
  d.side = field.side;
  d.values = field.values;
  return d;
}

Dataset read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  Dataset d;
  std::string line;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        d.values.push_back(v);
      } catch (const std::exception&) {
        throw Error(Errc::invalid_input, path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
      ++count;
    }
    if (rows == 0) columns = count;
    if (count != columns)
      throw Error(Errc::invalid_input, path.string() + ":" + std::to_string(line_no) + ": ragged row");
    ++rows;
  }
  if (columns > 1) {
    if (rows != columns) throw Error(Errc::invalid_input, "2D CSV input must be square");
    d.dimension = 2;
    d.side = rows;
  }
  return d;
}

void write_csv(const fs::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.precision(17);
  if (data.dimension == 1) {
    for (double v : data.values) out << v << '\n';
  } else {
    for (std::size_t r = 0; r < data.side; ++r) {
      for (std::size_t c = 0; c < data.side; ++c) {
        if (c) out << ',';
        out << data.values[r * data.side + c];
      }
      out << '\n';
    }
  }
}

Dataset read_binary(const fs::path& path) {
  fs::path header = path;
  header.replace_extension(".json");
  const json h = read_json(header);
  if (h.value("dtype", std::string("float64")) != "float64")
    throw Error(Errc::invalid_input, "unsupported dtype in " + header.string());
  Dataset d;
  d.dimension = h.at("dims").get<int>();
  std::size_t count = 0;
  if (d.dimension == 1) {
    count = h.at("length").get<std::size_t>();
  } else if (d.dimension == 2) {
    d.side = h.at("side").get<std::size_t>();
    count = d.side * d.side;
  } else {
    throw Error(Errc::invalid_input, "dims must be 1 or 2 in " + header.string());
  }
  d.values = read_array<double>(path, count);
  return d;
}

void write_binary(const fs::path& path, const Dataset& data) {
  write_array<double>(path, data.values);
  json h{{"dims", data.dimension}, {"dtype", "float64"}};
  if (data.dimension == 1)
    h["length"] = data.values.size();
  else
    h["side"] = data.side;
  fs::path header = path;
  header.replace_extension(".json");
  write_json(header, h);
}

Dataset read_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::io_error, "no such file: " + path.string());
  return path.extension() == ".bin" ? read_binary(path) : read_csv(path);
}

void write_dataset(const fs::path& path, const Dataset& data) {
  if (path.extension() == ".bin")
    write_binary(path, data);
  else
    write_csv(path, data);
}

std::string format_p(double p) {
  if (std::isinf(p)) return "inf";
  std::ostringstream os;
  os.precision(15);
  os << p;
  return os.str();
}

double parse_p(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInfinity;
  try {
    std::size_t used = 0;
    const double p = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return p;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_parameter, "cannot parse p value '" + text + "'");
  }
}

void write_pyramid(const fs::path& dir, const CoefficientPyramid& pyramid) {
  fs::create_directories(dir);
  json index{{"kind", "coefficients"},
             {"dimension", pyramid.dimension},
             {"sample_count", pyramid.sample_count},
             {"normalization", "L1"},
             {"filter", filter_json(pyramid.filter)}};
  json octaves = json::array();
  for (const auto& oct : pyramid.octaves) {
    json o{{"j", oct.j}, {"extent", oct.extent}, {"n_valid", oct.n_valid}, {"valid_prefix", oct.valid_prefix}};
    json bands = json::array();
    for (std::size_t b = 0; b < oct.bands.size(); ++b) {
      const std::string name = "c_j" + std::to_string(oct.j) + "_b" + std::to_string(b) + ".bin";
      write_array<double>(dir / name, oct.bands[b]);
      bands.push_back(name);
    }
    o["bands"] = bands;
    const std::string mask = "valid_j" + std::to_string(oct.j) + ".bin";
    write_array<std::uint8_t>(dir / mask, oct.valid);
    o["valid"] = mask;
    octaves.push_back(o);
  }
  index["octaves"] = octaves;
  write_array<double>(dir / "approx.bin", pyramid.approx);
  index["approx"] = {{"file", "approx.bin"}, {"length", pyramid.approx.size()}};
  write_json(dir / "index.json", index);
}

CoefficientPyramid read_pyramid(const fs::path& dir) {
  const json index = read_json(dir / "index.json");
  if (index.at("kind") != "coefficients") throw Error(Errc::invalid_input, dir.string() + " is not a coefficient pyramid");
  CoefficientPyramid pyr;
  pyr.dimension = index.at("dimension").get<int>();
  pyr.sample_count = index.at("sample_count").get<std::size_t>();
  pyr.filter = filter_from_json(index.at("filter"));
  for (const auto& o : index.at("octaves")) {
    CoefficientOctave oct;
    oct.j = o.at("j").get<int>();
    oct.extent = o.at("extent").get<std::size_t>();
    oct.n_valid = o.at("n_valid").get<std::size_t>();
    oct.valid_prefix = o.at("valid_prefix").get<std::size_t>();
    const std::size_t positions = pyr.dimension == 1 ? oct.extent : oct.extent * oct.extent;
    for (const auto& name : o.at("bands")) oct.bands.push_back(read_array<double>(dir / name.get<std::string>(), positions));
    oct.valid = read_array<std::uint8_t>(dir / o.at("valid").get<std::string>(), positions);
    pyr.octaves.push_back(std::move(oct));
  }
  pyr.approx = read_array<double>(dir / "approx.bin", index.at("approx").at("length").get<std::size_t>());
  return pyr;
}

void write_leaders(const fs::path& dir, const LeaderPyramid& leaders) {
  fs::create_directories(dir);
  json index{{"kind", "leaders"},
             {"dimension", leaders.dimension},
             {"p", format_p(leaders.p)},
             {"mode", leaders.mode == Neighborhood::full ? "full" : "restricted"}};
  json octaves = json::array();
  for (const auto& oct : leaders.octaves) {
    const std::string values = "l_j" + std::to_string(oct.j) + ".bin";
    const std::string mask = "valid_j" + std::to_string(oct.j) + ".bin";
    write_array<double>(dir / values, oct.values);
    write_array<std::uint8_t>(dir / mask, oct.valid);
    octaves.push_back({{"j", oct.j}, {"extent", oct.extent}, {"n_valid", oct.n_valid}, {"values", values}, {"valid", mask}});
  }
  index["octaves"] = octaves;
  write_json(dir / "index.json", index);
}

LeaderPyramid read_leaders(const fs::path& dir) {
  const json index = read_json(dir / "index.json");
  if (index.at("kind") != "leaders") throw Error(Errc::invalid_input, dir.string() + " is not a leader pyramid");
  LeaderPyramid lp;
  lp.dimension = index.at("dimension").get<int>();
  lp.p = parse_p(index.at("p").get<std::string>());
  lp.mode = index.at("mode") == "restricted" ? Neighborhood::restricted : Neighborhood::full;
  for (const auto& o : index.at("octaves")) {
    LeaderOctave oct;
    oct.j = o.at("j").get<int>();
    oct.extent = o.at("extent").get<std::size_t>();
    oct.n_valid = o.at("n_valid").get<std::size_t>();
    const std::size_t positions = lp.dimension == 1 ? oct.extent : oct.extent * oct.extent;
    oct.values = read_array<double>(dir / o.at("values").get<std::string>(), positions);
    oct.valid = read_array<std::uint8_t>(dir / o.at("valid").get<std::string>(), positions);
    lp.octaves.push_back(std::move(oct));
  }
  return lp;
}

}  // namespace plmf
