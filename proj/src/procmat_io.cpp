#include "qcausal/procmat_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace qcausal {

using nlohmann::json;

namespace {

std::size_t line_of(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

// Streams a procmat-v1 document. Entries go straight into the matrix once
// "dim" is known, so large files never materialize a JSON DOM.
class ProcmatSax : public nlohmann::json_sax<json> {
 public:
  explicit ProcmatSax(const std::string& text) : text_(text) {}

  bool null() override { return scalar_type_error("null"); }
  bool boolean(bool) override { return scalar_type_error("boolean"); }
  bool binary(binary_t&) override { return scalar_type_error("binary"); }

  bool number_integer(number_integer_t v) override {
    return number(static_cast<double>(v), true);
  }
  bool number_unsigned(number_unsigned_t v) override {
    return number(static_cast<double>(v), true);
  }
  bool number_float(number_float_t v, const string_t&) override { return number(v, false); }

  bool string(string_t& s) override {
    switch (field()) {
      case Field::Format: format_ = s; return true;
      case Field::PartyName: parties_.back().name = s; return true;
      case Field::MatrixLayout: layout_ = s; return true;
      case Field::Unknown: bump_parent(); return true;
      default: return fail("expected a number at " + where());
    }
  }

  bool start_object(std::size_t) override {
    if (in_pair_) return fail("entry " + std::to_string(entry_) + " must be [re, im]");
    stack_.push_back({false, {}, 0});
    if (stack_.size() == 3 && stack_[0].key == "parties" && stack_[1].is_array) {
      parties_.push_back(PartySpec{"", 0, {}, {}});
      party_has_subdims_ = false;
    }
    return true;
  }

  bool key(string_t& k) override {
    stack_.back().key = k;
    return true;
  }

  bool end_object() override {
    if (stack_.size() == 3 && stack_[0].key == "parties" && stack_[1].is_array) {
      const auto& p = parties_.back();
      const std::string at = "parties[" + std::to_string(parties_.size() - 1) + "]";
      if (p.name.empty()) return fail(at + ": missing \"name\"");
      if (p.input_dim < 1) return fail(at + ": missing or invalid \"input_dim\"");
      if (!party_has_subdims_ || p.output_subdims.empty()) {
        return fail(at + ": missing or empty \"output_subdims\"");
      }
    }
    stack_.pop_back();
    bump_parent();
    return true;
  }

  bool start_array(std::size_t) override {
    if (in_pair_) return fail("entry " + std::to_string(entry_) + " must be [re, im]");
    stack_.push_back({true, {}, 0});
    if (is_entries_array()) {
      entries_seen_ = true;
      if (dim_) {
        matrix_.resize(*dim_, *dim_);
        direct_ = true;
      }
    } else if (stack_.size() == 4 && stack_[0].key == "matrix" && stack_[1].key == "entries" &&
               stack_[2].is_array) {
      in_pair_ = true;
      pair_count_ = 0;
    } else if (stack_.size() == 4 && stack_[0].key == "parties" && stack_[2].key == "output_subdims") {
      party_has_subdims_ = true;
    }
    return true;
  }

  bool end_array() override {
    if (in_pair_) {
      if (pair_count_ != 2) return fail("entry " + std::to_string(entry_) + " must be [re, im]");
      store(Complex(re_, im_));
      in_pair_ = false;
      ++entry_;
    }
    stack_.pop_back();
    bump_parent();
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    error_ = "line " + std::to_string(line_of(text_, position)) + ": " + ex.what();
    return false;
  }

  ProcessMatrix finish(const std::string& source) {
    auto err = [&](const std::string& msg) { return ParseError(source + ": " + msg); };
    if (format_ != kProcmatFormat) {
      throw err("unsupported format '" + format_ + "', expected " + kProcmatFormat);
    }
    if (!dim_) throw err("missing matrix.dim");
    if (layout_ != "row-major") throw err("matrix.layout must be \"row-major\"");
    if (!entries_seen_) throw err("missing matrix.entries");

    SystemLayout layout;
    try {
      layout = SystemLayout(parties_);
    } catch (const LayoutError& e) {
      throw err(std::string("parties: ") + e.what());
    }
    if (layout.total_dim() != *dim_) {
      throw err("matrix.dim " + std::to_string(*dim_) + " does not match the layout product " +
                std::to_string(layout.total_dim()));
    }
    const Index expected = *dim_ * *dim_;
    if (entry_ != expected) {
      throw err("matrix.entries has " + std::to_string(entry_) + " entries, expected " +
                std::to_string(expected));
    }
    if (!direct_) {
      matrix_.resize(*dim_, *dim_);
      for (Index k = 0; k < expected; ++k) {
        matrix_(k / *dim_, k % *dim_) = buffer_[static_cast<std::size_t>(k)];
      }
    }
    return ProcessMatrix(std::move(layout), std::move(matrix_));
  }

  const std::string& error() const { return error_; }

 private:
  enum class Field { Format, PartyName, PartyInputDim, PartySubdim, MatrixDim, MatrixLayout, Entry, Unknown };

  struct Frame {
    bool is_array;
    std::string key;
    std::size_t count;
  };

  bool is_entries_array() const {
    return stack_.size() == 3 && stack_[0].key == "matrix" && !stack_[1].is_array &&
           stack_[1].key == "entries";
  }

  Field field() const {
    if (in_pair_) return Field::Entry;
    const std::size_t n = stack_.size();
    if (n == 1) return stack_[0].key == "format" ? Field::Format : Field::Unknown;
    if (n == 2 && stack_[0].key == "matrix" && !stack_[1].is_array) {
      if (stack_[1].key == "dim") return Field::MatrixDim;
      if (stack_[1].key == "layout") return Field::MatrixLayout;
    }
    if (n == 3 && stack_[0].key == "parties" && stack_[1].is_array && !stack_[2].is_array) {
      if (stack_[2].key == "name") return Field::PartyName;
      if (stack_[2].key == "input_dim") return Field::PartyInputDim;
    }
    if (n == 4 && stack_[0].key == "parties" && stack_[2].key == "output_subdims" && stack_[3].is_array) {
      return Field::PartySubdim;
    }
    return Field::Unknown;
  }

  std::string where() const {
    std::string out;
    for (std::size_t i = 0; i < stack_.size(); ++i) {
      if (stack_[i].is_array) {
        out += "[" + std::to_string(stack_[i].count) + "]";
      } else {
        if (!out.empty()) out += ".";
        out += stack_[i].key;
      }
    }
    return out.empty() ? "<root>" : out;
  }

  void bump_parent() {
    if (!stack_.empty() && stack_.back().is_array) ++stack_.back().count;
  }

  bool fail(std::string msg) {
    error_ = std::move(msg);
    return false;
  }

  bool scalar_type_error(const char* what) {
    if (field() == Field::Unknown) {
      bump_parent();
      return true;
    }
    return fail(std::string("unexpected ") + what + " at " + where());
  }

  std::optional<Index> positive_integer(double v, bool integral) {
    if (!integral && (v != std::floor(v))) return std::nullopt;
    if (v < 1 || v > 9.0e15) return std::nullopt;
    return static_cast<Index>(v);
  }

  bool number(double v, bool integral) {
    const Field f = field();
    if (f != Field::Unknown && f != Field::Entry && !std::isfinite(v)) {
      return fail("non-finite number at " + where());
    }
    switch (f) {
      case Field::Entry:
        if (!std::isfinite(v)) {
          return fail("non-finite value at matrix.entries[" + std::to_string(entry_) + "]");
        }
        if (pair_count_ == 0) {
          re_ = v;
        } else if (pair_count_ == 1) {
          im_ = v;
        } else {
          return fail("entry " + std::to_string(entry_) + " must be [re, im]");
        }
        ++pair_count_;
        return true;
      case Field::PartyInputDim: {
        auto d = positive_integer(v, integral);
        if (!d) return fail("input_dim must be a positive integer at " + where());
        parties_.back().input_dim = *d;
        return true;
      }
      case Field::PartySubdim: {
        auto d = positive_integer(v, integral);
        if (!d) return fail("output subsystem dims must be positive integers at " + where());
        parties_.back().output_subdims.push_back(*d);
        bump_parent();
        return true;
      }
      case Field::MatrixDim: {
        auto d = positive_integer(v, integral);
        if (!d) return fail("matrix.dim must be a positive integer");
        dim_ = *d;
        return true;
      }
      case Field::Unknown:
        bump_parent();
        return true;
      default:
        return fail("expected a string at " + where());
    }
  }

  void store(Complex z) {
    if (direct_) {
      const Index n = *dim_;
      if (entry_ < n * n) matrix_(entry_ / n, entry_ % n) = z;
    } else {
      buffer_.push_back(z);
    }
  }

  const std::string& text_;
  std::vector<Frame> stack_;
  std::string error_;

  std::string format_;
  std::string layout_;
  std::vector<PartySpec> parties_;
  bool party_has_subdims_ = false;
  std::optional<Index> dim_;

  bool entries_seen_ = false;
  bool direct_ = false;
  bool in_pair_ = false;
  int pair_count_ = 0;
  double re_ = 0.0;
  double im_ = 0.0;
  Index entry_ = 0;
  ComplexMatrix matrix_;
  std::vector<Complex> buffer_;
};

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

ProcessMatrix read_procmat(const std::string& text, const std::string& source) {
  ProcmatSax sax(text);
  const bool ok = json::sax_parse(text, &sax);
  if (!ok) throw ParseError(source + ": " + sax.error());
  return sax.finish(source);
}

ProcessMatrix load_procmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::string text;
  in.seekg(0, std::ios::end);
  text.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0, std::ios::beg);
  in.read(text.data(), static_cast<std::streamsize>(text.size()));
  return read_procmat(text, path.string());
}

void write_procmat(std::ostream& os, const ProcessMatrix& w) {
  const auto& m = w.matrix();
  os << "{\"format\":\"" << kProcmatFormat << "\",\n";
  os << " \"parties\":" << parties_to_json(w.layout()).dump() << ",\n";
  os << " \"matrix\":{\"dim\":" << m.rows() << ",\"layout\":\"row-major\",\"entries\":[\n";
  std::string row;
  for (Index r = 0; r < m.rows(); ++r) {
    row.clear();
    for (Index c = 0; c < m.cols(); ++c) {
      row += '[';
      row += format_double(m(r, c).real());
      row += ',';
      row += format_double(m(r, c).imag());
      row += ']';
      if (r + 1 < m.rows() || c + 1 < m.cols()) row += ',';
    }
    row += '\n';
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  os << "]}}\n";
}

void save_procmat(const ProcessMatrix& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_procmat(out, w);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json parties_to_json(const SystemLayout& layout) {
  json parties = json::array();
  for (const auto& p : layout.parties()) {
    parties.push_back({{"name", p.name}, {"input_dim", p.input_dim}, {"output_subdims", p.output_subdims}});
  }
  return parties;
}

SystemLayout parties_from_json(const json& parties) {
  if (!parties.is_array()) throw ParseError("\"parties\" must be an array");
  std::vector<PartySpec> specs;
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const auto& p = parties[i];
    const std::string at = "parties[" + std::to_string(i) + "]";
    try {
      PartySpec spec{p.at("name").get<std::string>(), p.at("input_dim").get<Index>(),
                     p.at("output_subdims").get<std::vector<Index>>(), {}};
      specs.push_back(std::move(spec));
    } catch (const json::exception& e) {
      throw ParseError(at + ": " + e.what());
    }
  }
  try {
    return SystemLayout(std::move(specs));
  } catch (const LayoutError& e) {
    throw ParseError(std::string("parties: ") + e.what());
  }
}

json matrix_to_json(const ComplexMatrix& m) {
  json entries = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) entries.push_back({m(r, c).real(), m(r, c).imag()});
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

ComplexMatrix matrix_from_json(const json& j) {
  try {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& entries = j.at("entries");
    if (rows < 1 || cols < 1 || entries.size() != static_cast<std::size_t>(rows * cols)) {
      throw ParseError("matrix entry count does not match rows x cols");
    }
    ComplexMatrix m(rows, cols);
    for (Index k = 0; k < rows * cols; ++k) {
      const auto& e = entries[static_cast<std::size_t>(k)];
      m(k / cols, k % cols) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
    }
    if (!m.allFinite()) throw ParseError("matrix has non-finite entries");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("matrix: ") + e.what());
  }
}

}  // namespace qcausal
