#include "drowsy/pgm.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <string>

namespace drowsy {

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in)
{
    std::string tok;
    char c = 0;
    while (in.get(c))
    {
        if (c == '#')
        {
            std::string comment;
            std::getline(in, comment);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c)))
        {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

} // namespace

RoiImage read_pgm(const std::filesystem::path& path, RoiKind kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    if (header_token(in) != "P5")
        throw std::runtime_error(path.string() + ": not a binary PGM (P5)");

    RoiImage img;
    img.kind = kind;
    try
    {
        img.width = std::stoi(header_token(in));
        img.height = std::stoi(header_token(in));
        if (std::stoi(header_token(in)) != 255)
            throw std::runtime_error("only 8-bit PGM is supported");
    }
    catch (const std::invalid_argument&)
    {
        throw std::runtime_error(path.string() + ": malformed PGM header");
    }
    if (img.width < 1 || img.height < 1)
        throw std::runtime_error(path.string() + ": empty image");

    img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error(path.string() + ": truncated pixel data");
    return img;
}

void write_pgm(const std::filesystem::path& path, const RoiImage& img)
{
    img.validate();
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out)
        throw std::runtime_error("failed to write " + path.string());
}

} // namespace drowsy
