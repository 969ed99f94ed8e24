//! Parse a flattened icon and print its subpaths as absolute cubic path data.

use iconstack::svg::parse_svg;

const ICON: &str = r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 24 24">
  <path d="M12 2a10 10 0 1 0 0 20a10 10 0 1 0 0-20zm0 4v8h-2V6z" fill-rule="evenodd"/>
</svg>"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = parse_svg(ICON.as_bytes())?;
    println!("viewBox {:?}, fill rule {:?}", path.viewbox, path.fill_rule);
    for (i, sp) in path.subpaths.iter().enumerate() {
        println!("subpath {i}: {} cubic segments, signed area {:.2}", sp.segments.len(), sp.signed_area());
    }
    println!("{}", path.to_path_data());
    Ok(())
}
