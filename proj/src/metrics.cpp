#include "relight/metrics.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "relight/error.hpp"
#include "relight/image_io.hpp"
#include "relight/mask.hpp"

namespace relight {

namespace {

constexpr std::array<const char*, 4> kVariationOrder{"temperature", "position", "energy", "mixed"};

Map pm1_luminance(const Image<double>& img) {
  if (img.channels() != 3) throw ShapeError("ssim needs 3-channel images");
  Map y(img.height(), img.width(), 1);
  for (std::size_t p = 0; p < img.pixels(); ++p)
    y.at(p) = 0.2126 * img.at(p, 0) + 0.7152 * img.at(p, 1) + 0.0722 * img.at(p, 2);
  return y;
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Image<double> normalize_pm1(const Image<double>& img, double exposure) {
  if (!(exposure > 0.0)) throw DomainError("exposure must be > 0");
  Image<double> out(img.height(), img.width(), img.channels());
  for (std::size_t i = 0; i < img.size(); ++i)
    out.data()[i] = 2.0 * srgb_encode(img.data()[i] * exposure) - 1.0;
  return out;
}

double rmse(const Image<double>& a, const Image<double>& b) {
  require_same_shape(a, b, "rmse");
  if (a.empty()) throw ShapeError("rmse of empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

double psnr_from_rmse(double e) {
  if (e < kPsnrCapRmse) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 20.0 * std::log10(2.0 / e));
}

double psnr(const Image<double>& a, const Image<double>& b) { return psnr_from_rmse(rmse(a, b)); }

double ssim(const Image<double>& a, const Image<double>& b) {
  require_same_shape(a, b, "ssim");
  const Map x = pm1_luminance(a), y = pm1_luminance(b);
  const double c1 = (0.01 * 2.0) * (0.01 * 2.0);
  const double c2 = (0.03 * 2.0) * (0.03 * 2.0);
  Map xx(x.height(), x.width(), 1), yy = xx, xy = xx;
  for (std::size_t p = 0; p < x.pixels(); ++p) {
    xx.at(p) = x.at(p) * x.at(p);
    yy.at(p) = y.at(p) * y.at(p);
    xy.at(p) = x.at(p) * y.at(p);
  }
  const double sigma = 1.5;
  const Map mx = gaussian_blur(x, sigma), my = gaussian_blur(y, sigma);
  const Map sxx = gaussian_blur(xx, sigma), syy = gaussian_blur(yy, sigma), sxy = gaussian_blur(xy, sigma);
  double total = 0.0;
  for (std::size_t p = 0; p < x.pixels(); ++p) {
    const double ux = mx.at(p), uy = my.at(p);
    const double vx = sxx.at(p) - ux * ux, vy = syy.at(p) - uy * uy, cxy = sxy.at(p) - ux * uy;
    total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(x.pixels());
}

EvalReport evaluate_items(const std::vector<EvalItem>& items, double exposure) {
  EvalReport report;
  std::map<std::string, EvalRow> acc;
  EvalRow overall{"overall"};
  for (const auto& item : items) {
    if (!item.prediction) {
      report.errors.push_back("missing prediction for pair " + item.pair_id);
      continue;
    }
    const Image<double> a = normalize_pm1(*item.prediction, exposure);
    const Image<double> b = normalize_pm1(item.target, exposure);
    const double e = rmse(a, b), s = ssim(a, b), q = psnr_from_rmse(e);
    EvalRow& row = acc[item.variation];
    row.variation = item.variation;
    for (EvalRow* r : {&row, &overall}) {
      r->rmse += e;
      r->ssim += s;
      r->psnr += q;
      ++r->n_pairs;
    }
  }
  auto finish = [](EvalRow& r) {
    const double n = static_cast<double>(r.n_pairs);
    r.rmse /= n;
    r.ssim /= n;
    r.psnr /= n;
  };
  for (const char* v : kVariationOrder) {
    auto it = acc.find(v);
    if (it == acc.end()) continue;
    finish(it->second);
    report.rows.push_back(it->second);
    acc.erase(it);
  }
  for (auto& [name, row] : acc) {
    finish(row);
    report.rows.push_back(row);
  }
  if (overall.n_pairs > 0) finish(overall);
  report.overall = overall;
  return report;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "variation,rmse,ssim,psnr,n_pairs\n";
  auto line = [&](const EvalRow& r) {
    os << r.variation << ',' << number(r.rmse) << ',' << number(r.ssim) << ',' << number(r.psnr) << ','
       << r.n_pairs << '\n';
  };
  for (const auto& r : rows) line(r);
  if (overall.n_pairs > 0) line(overall);
  return os.str();
}

std::string EvalReport::to_json() const {
  auto row_json = [](const EvalRow& r) {
    return nlohmann::ordered_json{{"variation", r.variation}, {"rmse", r.rmse}, {"ssim", r.ssim},
                                  {"psnr", r.psnr}, {"n_pairs", r.n_pairs}};
  };
  nlohmann::ordered_json j;
  j["schema"] = "relight-eval/1";
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) j["rows"].push_back(row_json(r));
  j["overall"] = row_json(overall);
  j["errors"] = errors;
  j["provenance"] = {{"manifest_sha256", manifest_hash}, {"config_sha256", config_hash}};
  return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

}  // namespace relight
