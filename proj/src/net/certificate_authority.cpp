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

#include "trafficledger/proxy/certificate_authority.hpp"

#include "trafficledger/proxy/socket.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <arpa/inet.h>

#include <fstream>
#include <sstream>
#include <vector>

namespace trafficledger::net {

void X509Deleter::operator()(X509* x) const { X509_free(x); }
void PkeyDeleter::operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }

namespace {

namespace fs = std::filesystem;

struct BioDeleter {
    void operator()(BIO* b) const { BIO_free(b); }
};
using BioPtr = std::unique_ptr<BIO, BioDeleter>;

PkeyPtr generate_key() {
    PkeyPtr key(EVP_RSA_gen(2048));
    if (!key) throw CaError("key generation failed: " + openssl_error());
    return key;
}

void random_serial(X509* cert) {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) throw CertError("no randomness for serial");
    bytes[0] &= 0x7f; // keep it positive
    BIGNUM* bn = BN_bin2bn(bytes, sizeof bytes, nullptr);
    BN_to_ASN1_INTEGER(bn, X509_get_serialNumber(cert));
    BN_free(bn);
}

void add_ext(X509* cert, X509* issuer, int nid, const char* value) {
    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value);
    if (!ext) throw CertError(std::string("bad extension value '") + value + "': " + openssl_error());
    X509_add_ext(cert, ext, -1);
    X509_EXTENSION_free(ext);
}

bool is_ip_literal(const std::string& host) {
    unsigned char buf[16];
    return inet_pton(AF_INET, host.c_str(), buf) == 1 || inet_pton(AF_INET6, host.c_str(), buf) == 1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CaError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& data, fs::perms perms) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CaError("cannot write " + tmp.string());
        out << data;
        if (!out) throw CaError("cannot write " + tmp.string());
    }
    fs::permissions(tmp, perms);
    fs::rename(tmp, p);
}

std::string key_to_pem(EVP_PKEY* key) {
    BioPtr bio(BIO_new(BIO_s_mem()));
    if (!PEM_write_bio_PrivateKey(bio.get(), key, nullptr, nullptr, 0, nullptr, nullptr))
        throw CaError("cannot encode key: " + openssl_error());
    char* data = nullptr;
    const long len = BIO_get_mem_data(bio.get(), &data);
    return std::string(data, static_cast<std::size_t>(len));
}

std::pair<X509Ptr, PkeyPtr> make_root(std::string_view common_name) {
    PkeyPtr key = generate_key();
    X509Ptr cert(X509_new());
    X509_set_version(cert.get(), 2);
    random_serial(cert.get());
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * 3650);
    X509_set_pubkey(cert.get(), key.get());
    X509_NAME* name = X509_get_subject_name(cert.get());
    const std::string cn(common_name);
    X509_NAME_add_entry_by_txt(name, "O", MBSTRING_UTF8, reinterpret_cast<const unsigned char*>("trafficledger"), -1,
                               -1, 0);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8, reinterpret_cast<const unsigned char*>(cn.c_str()), -1, -1,
                               0);
    X509_set_issuer_name(cert.get(), name);
    add_ext(cert.get(), cert.get(), NID_basic_constraints, "critical,CA:TRUE,pathlen:0");
    add_ext(cert.get(), cert.get(), NID_key_usage, "critical,keyCertSign,cRLSign");
    add_ext(cert.get(), cert.get(), NID_subject_key_identifier, "hash");
    if (!X509_sign(cert.get(), key.get(), EVP_sha256())) throw CaError("cannot sign root: " + openssl_error());
    return {std::move(cert), std::move(key)};
}

} // namespace

std::string x509_to_pem(X509* cert) {
    BioPtr bio(BIO_new(BIO_s_mem()));
    if (!PEM_write_bio_X509(bio.get(), cert)) throw CertError("cannot encode certificate: " + openssl_error());
    char* data = nullptr;
    const long len = BIO_get_mem_data(bio.get(), &data);
    return std::string(data, static_cast<std::size_t>(len));
}

std::vector<std::string> subject_alt_names(X509* cert) {
    std::vector<std::string> out;
    auto* names = static_cast<GENERAL_NAMES*>(X509_get_ext_d2i(cert, NID_subject_alt_name, nullptr, nullptr));
    if (!names) return out;
    for (int i = 0; i < sk_GENERAL_NAME_num(names); ++i) {
        const GENERAL_NAME* gn = sk_GENERAL_NAME_value(names, i);
        if (gn->type == GEN_DNS) {
            const auto* s = gn->d.dNSName;
            out.emplace_back(reinterpret_cast<const char*>(ASN1_STRING_get0_data(s)),
                             static_cast<std::size_t>(ASN1_STRING_length(s)));
        } else if (gn->type == GEN_IPADD) {
            const auto* s = gn->d.iPAddress;
            char buf[64] = {};
            const int af = ASN1_STRING_length(s) == 4 ? AF_INET : AF_INET6;
            inet_ntop(af, ASN1_STRING_get0_data(s), buf, sizeof buf);
            out.emplace_back(buf);
        }
    }
    GENERAL_NAMES_free(names);
    return out;
}

CertificateAuthority::CertificateAuthority(X509Ptr root, PkeyPtr root_key, std::string pem)
    : root_(std::move(root)), root_key_(std::move(root_key)), leaf_key_(generate_key()), root_pem_(std::move(pem)) {}

std::shared_ptr<CertificateAuthority> CertificateAuthority::load_or_create(const fs::path& dir) {
    const fs::path cert_path = dir / kCertFile;
    const fs::path key_path = dir / kKeyFile;
    std::error_code ec;
    const bool have_cert = fs::exists(cert_path, ec);
    const bool have_key = fs::exists(key_path, ec);

    if (!have_cert && !have_key) {
        fs::create_directories(dir, ec);
        if (ec) throw CaError("cannot create CA directory " + dir.string() + ": " + ec.message());
        auto [cert, key] = make_root("trafficledger local interception root");
        std::string pem = x509_to_pem(cert.get());
        write_file(key_path, key_to_pem(key.get()), fs::perms::owner_read | fs::perms::owner_write);
        write_file(cert_path, pem, fs::perms::owner_read | fs::perms::owner_write | fs::perms::group_read |
                                       fs::perms::others_read);
        return std::shared_ptr<CertificateAuthority>(new CertificateAuthority(std::move(cert), std::move(key), pem));
    }
    if (have_cert != have_key)
        throw CaError("incomplete CA in " + dir.string() + ": need both " + kCertFile + " and " + kKeyFile);

    const std::string cert_text = read_file(cert_path);
    const std::string key_text = read_file(key_path);
    BioPtr cb(BIO_new_mem_buf(cert_text.data(), static_cast<int>(cert_text.size())));
    X509Ptr cert(PEM_read_bio_X509(cb.get(), nullptr, nullptr, nullptr));
    if (!cert) throw CaError("unreadable CA certificate " + cert_path.string() + ": " + openssl_error());
    BioPtr kb(BIO_new_mem_buf(key_text.data(), static_cast<int>(key_text.size())));
    PkeyPtr key(PEM_read_bio_PrivateKey(kb.get(), nullptr, nullptr, nullptr));
    if (!key) throw CaError("unreadable CA key " + key_path.string() + ": " + openssl_error());
    if (X509_check_private_key(cert.get(), key.get()) != 1)
        throw CaError("CA key does not match certificate in " + dir.string());
    if (X509_check_ca(cert.get()) == 0) throw CaError(cert_path.string() + " is not a CA certificate");
    std::string pem = x509_to_pem(cert.get());
    return std::shared_ptr<CertificateAuthority>(new CertificateAuthority(std::move(cert), std::move(key), pem));
}

std::shared_ptr<CertificateAuthority> CertificateAuthority::create_in_memory(std::string_view common_name) {
    auto [cert, key] = make_root(common_name);
    std::string pem = x509_to_pem(cert.get());
    return std::shared_ptr<CertificateAuthority>(new CertificateAuthority(std::move(cert), std::move(key), pem));
}

std::string CertificateAuthority::root_subject() const {
    char buf[512];
    X509_NAME_oneline(X509_get_subject_name(root_.get()), buf, sizeof buf);
    return buf;
}

std::shared_ptr<const LeafCertificate> CertificateAuthority::mint_leaf_certificate(std::string_view host_in) {
    std::string host(host_in);
    for (auto& c : host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (host.empty() || host.size() > 253 || host.find_first_of(" ,/\\\r\n\t") != std::string::npos)
        throw CertError("invalid host name '" + std::string(host_in) + "'");

    std::lock_guard lk(mu_);
    if (auto it = cache_.find(host); it != cache_.end()) return it->second;

    try {
        X509Ptr cert(X509_new());
        X509_set_version(cert.get(), 2);
        random_serial(cert.get());
        X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
        X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * 397);
        X509_set_pubkey(cert.get(), leaf_key_.get());
        X509_NAME* name = X509_get_subject_name(cert.get());
        const std::string cn = host.size() <= 64 ? host : host.substr(0, 64);
        X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8, reinterpret_cast<const unsigned char*>(cn.c_str()), -1,
                                   -1, 0);
        X509_set_issuer_name(cert.get(), X509_get_subject_name(root_.get()));
        const std::string san = (is_ip_literal(host) ? "IP:" : "DNS:") + host;
        add_ext(cert.get(), root_.get(), NID_subject_alt_name, san.c_str());
        add_ext(cert.get(), root_.get(), NID_basic_constraints, "critical,CA:FALSE");
        add_ext(cert.get(), root_.get(), NID_key_usage, "critical,digitalSignature,keyEncipherment");
        add_ext(cert.get(), root_.get(), NID_ext_key_usage, "serverAuth");
        add_ext(cert.get(), root_.get(), NID_authority_key_identifier, "keyid:always");
        if (!X509_sign(cert.get(), root_key_.get(), EVP_sha256()))
            throw CertError("cannot sign certificate for " + host + ": " + openssl_error());

        auto leaf = std::make_shared<LeafCertificate>();
        leaf->pem = x509_to_pem(cert.get());
        leaf->cert = std::move(cert);
        leaf->host = host;
        cache_.emplace(host, leaf);
        return leaf;
    } catch (const CaError& e) {
        throw CertError(e.what());
    }
}

} // namespace trafficledger::net
