#include "brwlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace brw {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_hash(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_table(const std::vector<CsvRow>& rows, const std::string& zx_name) {
  std::ostringstream os;
  os << zx_name
     << ",n,estimate,stderr,replications,estimator_kind,model_hash,seed,schema_version\n";
  for (const auto& r : rows) {
    os << format_double(r.zx) << ',' << r.n << ',' << format_double(r.estimate) << ','
       << format_double(r.stderr_) << ',' << r.replications << ',' << r.estimator_kind
       << ',' << format_hash(r.model_hash) << ',' << r.seed << ',' << kSchemaVersion
       << '\n';
  }
  return os.str();
}

}  // namespace brw
