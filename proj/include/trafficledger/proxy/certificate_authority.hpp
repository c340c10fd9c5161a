// Copyright 2026 The trafficledger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

using X509 = struct x509_st;
using EVP_PKEY = struct evp_pkey_st;

namespace trafficledger::net {

/// The root cannot be created, read, or is inconsistent with its key.
class CaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A leaf certificate could not be issued.
class CertError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct X509Deleter {
    void operator()(X509* x) const;
};
struct PkeyDeleter {
    void operator()(EVP_PKEY* k) const;
};
using X509Ptr = std::unique_ptr<X509, X509Deleter>;
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct LeafCertificate {
    X509Ptr cert;
    std::string host;
    std::string pem;
};

/// Local root used to mint per-host certificates for interception. The root
/// lives in `ca.pem` / `ca-key.pem` inside its directory and is reused across
/// sessions; the user installs `ca.pem` in the browser's trust store.
class CertificateAuthority {
public:
    static constexpr const char* kCertFile = "ca.pem";
    static constexpr const char* kKeyFile = "ca-key.pem";

    /// Loads the root from `dir`, generating it on first use.
    static std::shared_ptr<CertificateAuthority> load_or_create(const std::filesystem::path& dir);
    /// Ephemeral root that is never written to disk.
    static std::shared_ptr<CertificateAuthority> create_in_memory(std::string_view common_name);

    const std::string& root_pem() const { return root_pem_; }
    std::string root_subject() const;
    X509* root() const { return root_.get(); }

    /// Certificate for `host` (DNS name or IP literal) signed by the root,
    /// cached per host. All leaves share one key, see leaf_key().
    std::shared_ptr<const LeafCertificate> mint_leaf_certificate(std::string_view host);
    EVP_PKEY* leaf_key() const { return leaf_key_.get(); }

private:
    CertificateAuthority(X509Ptr root, PkeyPtr root_key, std::string pem);

    X509Ptr root_;
    PkeyPtr root_key_;
    PkeyPtr leaf_key_;
    std::string root_pem_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<const LeafCertificate>, std::less<>> cache_;
};

std::string x509_to_pem(X509* cert);
/// Subject alternative names of `cert`, DNS and IP entries, as text.
std::vector<std::string> subject_alt_names(X509* cert);

} // namespace trafficledger::net
