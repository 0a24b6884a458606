#include <curl/curl.h>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <system_error>

#include "qek/datasets.hpp"

namespace qek {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw DatasetError("sha256: digest initialisation failed");
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

namespace {

std::size_t write_to_file(char* data, std::size_t size, std::size_t count, void* user) {
  return std::fwrite(data, size, count, static_cast<std::FILE*>(user)) * size;
}

void download(const std::string& url, const fs::path& target) {
  std::unique_ptr<std::FILE, decltype(&std::fclose)> file(std::fopen(target.c_str(), "wb"), &std::fclose);
  if (!file) throw DatasetError("cannot write " + target.string());
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
  if (!curl) throw NetworkError("libcurl initialisation failed");
  char err[CURL_ERROR_SIZE] = {};
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT, 30L);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &write_to_file);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, file.get());
  curl_easy_setopt(curl.get(), CURLOPT_ERRORBUFFER, err);
  const CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) {
    file.reset();
    std::error_code ec;
    fs::remove(target, ec);
    throw NetworkError("download of " + url + " failed: " + (err[0] ? std::string(err) : curl_easy_strerror(rc)));
  }
}

}  // namespace

FetchStatus fetch(const DatasetSchema& schema, const fs::path& destination) {
  if (fs::exists(destination)) {
    if (!schema.digest_pinned()) return FetchStatus::Cached;
    if (sha256_file(destination) == schema.sha256) return FetchStatus::Cached;
  }
  if (destination.has_parent_path()) fs::create_directories(destination.parent_path());
  fs::path partial = destination;
  partial += ".part";
  download(schema.url, partial);

  const std::string digest = sha256_file(partial);
  if (schema.digest_pinned() && digest != schema.sha256) {
    std::error_code ec;
    fs::remove(partial, ec);
    throw ChecksumMismatchError(schema.sha256, digest);
  }
  if (!schema.digest_pinned())
    std::cerr << "warning: no pinned digest for " << schema.name << "; downloaded file has sha256 " << digest
              << '\n';
  fs::rename(partial, destination);
  return FetchStatus::Downloaded;
}

}  // namespace qek
