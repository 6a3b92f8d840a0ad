//! Seeded SQLite fixture databases.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use otforge_core::Database;
use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::Connection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Music store with 11 tables and 63 columns.
    Chinook,
    /// movie, cast, person, oscar_nominee, oscar.
    Movies,
    /// Three tables, 19 rows, with ties, duplicates and NULLs.
    Shop,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [Fixture::Chinook, Fixture::Movies, Fixture::Shop];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Chinook => "chinook",
            Fixture::Movies => "movies",
            Fixture::Shop => "shop",
        }
    }

    /// DDL and data as one SQL script.
    pub fn sql(self) -> String {
        match self {
            Fixture::Chinook => chinook_sql(),
            Fixture::Movies => MOVIES_SQL.to_string(),
            Fixture::Shop => SHOP_SQL.to_string(),
        }
    }

    pub fn connection(self) -> Connection {
        let conn = Connection::open_in_memory().expect("in-memory database");
        conn.execute_batch(&self.sql()).expect("fixture script");
        conn
    }

    /// In-memory database; its schema id is "memory".
    pub fn in_memory(self) -> Database {
        Database::from_connection(self.connection())
    }

    /// Writes `<dir>/<name>.sqlite`, replacing an existing file.
    pub fn write_to(self, dir: &Path) -> rusqlite::Result<PathBuf> {
        let path = dir.join(format!("{}.sqlite", self.name()));
        if path.exists() {
            std::fs::remove_file(&path)
                .map_err(|e| rusqlite::Error::ToSqlConversionFailure(Box::new(e)))?;
        }
        let conn = Connection::open(&path)?;
        conn.execute_batch(&self.sql())?;
        Ok(path)
    }
}

pub const MOVIES_SQL: &str = "
CREATE TABLE movie (
    id INTEGER PRIMARY KEY,
    title TEXT NOT NULL,
    release_year INTEGER,
    vote_average REAL,
    budget INTEGER,
    genre TEXT
);
CREATE TABLE person (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    birth_place TEXT
);
CREATE TABLE \"cast\" (
    movie_id INTEGER NOT NULL REFERENCES movie(id),
    person_id INTEGER NOT NULL REFERENCES person(id),
    character TEXT,
    PRIMARY KEY (movie_id, person_id)
);
CREATE TABLE oscar (
    id INTEGER PRIMARY KEY,
    year INTEGER NOT NULL,
    category TEXT NOT NULL
);
CREATE TABLE oscar_nominee (
    id INTEGER PRIMARY KEY,
    person_id INTEGER NOT NULL REFERENCES person(id),
    oscar_id INTEGER NOT NULL REFERENCES oscar(id)
);
INSERT INTO movie VALUES
    (1, 'The Notebook', 2004, 7.8, 29000000, 'Romance'),
    (2, 'Before Sunrise', 1995, 8.1, 2500000, 'Romance'),
    (3, 'Before Sunset', 2004, 8.0, 2700000, 'Romance'),
    (4, 'Drive', 2011, 7.8, 15000000, 'Crime'),
    (5, 'Mean Girls', 2004, 7.1, 17000000, 'Comedy'),
    (6, 'Gattaca', 1997, 7.8, 36000000, 'Drama'),
    (7, 'Desert Bloom', 1986, 6.0, 8000000, 'Drama'),
    (8, 'Small Town Blues', 1999, 6.4, 4000000, 'Drama'),
    (9, 'Ocean''s Eleven', 2001, 7.7, 85000000, 'Crime'),
    (10, 'Fight Club', 1999, 8.8, 63000000, 'Drama');
INSERT INTO person VALUES
    (1, 'Ryan Gosling', 'London, Ontario'),
    (2, 'Rachel McAdams', 'London, Ontario'),
    (3, 'Ethan Hawke', 'Austin'),
    (4, 'Julie Delpy', 'Paris'),
    (5, 'Jon Voight', 'Yonkers'),
    (6, 'Glen Holt', NULL),
    (7, 'Brad Pitt', 'Shawnee'),
    (8, 'George Clooney', 'Lexington'),
    (9, 'Uma Thurman', 'Boston');
INSERT INTO \"cast\" VALUES
    (1, 1, 'Noah'),
    (1, 2, 'Allie'),
    (2, 3, 'Jesse'),
    (2, 4, 'Celine'),
    (3, 3, 'Jesse'),
    (3, 4, 'Celine'),
    (4, 1, 'Driver'),
    (5, 2, 'Regina'),
    (6, 3, 'Vincent'),
    (6, 9, 'Irene'),
    (7, 5, 'Jesse'),
    (8, 6, 'Jesse'),
    (9, 7, 'Rusty'),
    (9, 8, 'Danny'),
    (10, 7, 'Tyler');
INSERT INTO oscar VALUES
    (1, 1979, 'Best Actor'),
    (2, 1986, 'Best Supporting Actor'),
    (3, 1995, 'Best Supporting Actor'),
    (4, 2002, 'Best Supporting Actor'),
    (5, 2005, 'Best Adapted Screenplay'),
    (6, 2007, 'Best Supporting Actor'),
    (7, 2012, 'Best Actor'),
    (8, 2016, 'Best Actress'),
    (9, 2020, 'Best Supporting Actor');
INSERT INTO oscar_nominee VALUES
    (1, 5, 1),
    (2, 5, 2),
    (3, 6, 3),
    (4, 3, 4),
    (5, 3, 5),
    (6, 1, 6),
    (7, 8, 7),
    (8, 2, 8),
    (9, 7, 9);
";

pub const SHOP_SQL: &str = "
CREATE TABLE customer (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    city TEXT,
    vip BOOLEAN
);
CREATE TABLE product (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    price REAL,
    category TEXT
);
CREATE TABLE purchase (
    id INTEGER PRIMARY KEY,
    customer_id INTEGER NOT NULL REFERENCES customer(id),
    product_id INTEGER NOT NULL REFERENCES product(id),
    qty INTEGER,
    day DATE
);
INSERT INTO customer VALUES
    (1, 'Ada', 'Zurich', 1),
    (2, 'Ben', 'Basel', 0),
    (3, 'Cleo', NULL, 1),
    (4, 'Dan', 'Zurich', 0),
    (5, 'Eve', 'Bern', NULL);
INSERT INTO product VALUES
    (1, 'Pen', 2.5, 'office'),
    (2, 'Pad', 2.5, 'office'),
    (3, 'Lamp', 30.0, 'home'),
    (4, 'Mug', 8.0, 'home'),
    (5, 'Desk', 120.0, NULL),
    (6, 'Pen', 3.0, 'office');
INSERT INTO purchase VALUES
    (1, 1, 1, 2, '2023-01-03'),
    (2, 1, 3, 1, '2023-01-03'),
    (3, 2, 1, 5, '2023-02-10'),
    (4, 2, 4, NULL, '2023-02-11'),
    (5, 3, 2, 5, '2023-03-01'),
    (6, 4, 5, 1, NULL),
    (7, 4, 1, 2, '2023-03-05'),
    (8, 1, 6, 3, '2023-04-01');
";

const CHINOOK_DDL: &str = "
CREATE TABLE artist (
    artist_id INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE album (
    album_id INTEGER PRIMARY KEY,
    title TEXT NOT NULL,
    artist_id INTEGER NOT NULL REFERENCES artist(artist_id)
);
CREATE TABLE genre (
    genre_id INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE media_type (
    media_type_id INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE track (
    track_id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    album_id INTEGER REFERENCES album(album_id),
    media_type_id INTEGER NOT NULL REFERENCES media_type(media_type_id),
    genre_id INTEGER REFERENCES genre(genre_id),
    composer TEXT,
    milliseconds INTEGER NOT NULL,
    bytes INTEGER,
    unit_price REAL NOT NULL
);
CREATE TABLE playlist (
    playlist_id INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE playlist_track (
    playlist_id INTEGER NOT NULL REFERENCES playlist(playlist_id),
    track_id INTEGER NOT NULL REFERENCES track(track_id),
    PRIMARY KEY (playlist_id, track_id)
);
CREATE TABLE employee (
    employee_id INTEGER PRIMARY KEY,
    last_name TEXT NOT NULL,
    first_name TEXT NOT NULL,
    title TEXT,
    reports_to INTEGER REFERENCES employee(employee_id),
    birth_date DATE,
    hire_date DATE,
    address TEXT,
    city TEXT,
    state TEXT,
    country TEXT,
    postal_code TEXT,
    phone TEXT,
    email TEXT
);
CREATE TABLE customer (
    customer_id INTEGER PRIMARY KEY,
    first_name TEXT NOT NULL,
    last_name TEXT NOT NULL,
    company TEXT,
    address TEXT,
    city TEXT,
    state TEXT,
    country TEXT,
    postal_code TEXT,
    phone TEXT,
    fax TEXT,
    email TEXT NOT NULL,
    support_rep_id INTEGER REFERENCES employee(employee_id)
);
CREATE TABLE invoice (
    invoice_id INTEGER PRIMARY KEY,
    customer_id INTEGER NOT NULL REFERENCES customer(customer_id),
    invoice_date DATE NOT NULL,
    billing_address TEXT,
    billing_city TEXT,
    billing_state TEXT,
    billing_country TEXT,
    billing_postal_code TEXT,
    total REAL NOT NULL
);
CREATE TABLE invoice_line (
    invoice_line_id INTEGER PRIMARY KEY,
    invoice_id INTEGER NOT NULL REFERENCES invoice(invoice_id),
    track_id INTEGER NOT NULL REFERENCES track(track_id),
    unit_price REAL NOT NULL,
    quantity INTEGER NOT NULL
);
";

const ARTISTS: &[&str] = &[
    "AC/DC",
    "Accept",
    "Aerosmith",
    "Alanis Morissette",
    "Audioslave",
    "Miles Davis",
    "Antonio Carlos Jobim",
    "Led Zeppelin",
];
const GENRES: &[&str] = &["Rock", "Jazz", "Metal", "Blues", "Sci Fi & Fantasy"];
const MEDIA: &[&str] = &[
    "MPEG audio file",
    "Protected AAC audio file",
    "AAC audio file",
];
const WORDS: &[&str] = &[
    "Love", "Night", "Fire", "Road", "Blue", "Rain", "Stone", "Heart", "Train", "Dream", "Light",
    "River",
];
const COMPOSERS: &[&str] = &[
    "Angus Young",
    "Steven Tyler",
    "Jimmy Page",
    "Tom Jobim",
    "Chris Cornell",
];
const FIRST: &[&str] = &[
    "Luis",
    "Leonie",
    "Francois",
    "Bjorn",
    "Frantisek",
    "Helena",
    "Astrid",
    "Daan",
];
const LAST: &[&str] = &[
    "Goncalves",
    "Kohler",
    "Tremblay",
    "Hansen",
    "Wichterlova",
    "Holy",
    "Gruber",
    "Peeters",
];
const PLACES: &[(&str, Option<&str>, &str)] = &[
    ("Sao Paulo", Some("SP"), "Brazil"),
    ("Stuttgart", None, "Germany"),
    ("Montreal", Some("QC"), "Canada"),
    ("Oslo", None, "Norway"),
    ("Prague", None, "Czech Republic"),
    ("Calgary", Some("AB"), "Canada"),
    ("Vienne", None, "Austria"),
];
const COMPANIES: &[&str] = &["Embraer", "JetBrains", "Woodstock Discos", "Telus"];
const TITLES: &[&str] = &[
    "General Manager",
    "Sales Manager",
    "Sales Support Agent",
    "IT Staff",
];
const PLAYLISTS: &[&str] = &["Music", "Movies", "90s Music", "Grunge"];

fn q(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn opt(s: Option<&str>) -> String {
    s.map_or_else(|| "NULL".to_string(), q)
}

/// The music-store fixture. Data is drawn from a fixed seed, so the script
/// is identical across runs.
pub fn chinook_sql() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0C41_400C);
    let mut s = String::from(CHINOOK_DDL);

    for (i, a) in ARTISTS.iter().enumerate() {
        let _ = writeln!(s, "INSERT INTO artist VALUES ({}, {});", i + 1, q(a));
    }
    for (i, g) in GENRES.iter().enumerate() {
        let _ = writeln!(s, "INSERT INTO genre VALUES ({}, {});", i + 1, q(g));
    }
    for (i, m) in MEDIA.iter().enumerate() {
        let _ = writeln!(s, "INSERT INTO media_type VALUES ({}, {});", i + 1, q(m));
    }
    let albums = 12;
    for i in 1..=albums {
        let title = format!(
            "{} {}",
            WORDS.choose(&mut rng).unwrap(),
            WORDS.choose(&mut rng).unwrap()
        );
        let artist = (i - 1) % ARTISTS.len() + 1;
        let _ = writeln!(
            s,
            "INSERT INTO album VALUES ({i}, {}, {artist});",
            q(&title)
        );
    }
    let tracks = 40;
    for i in 1..=tracks {
        let name = format!(
            "{} of {}",
            WORDS.choose(&mut rng).unwrap(),
            WORDS.choose(&mut rng).unwrap()
        );
        let album = rng.random_range(1..=albums);
        let media = rng.random_range(1..=MEDIA.len());
        let genre = rng.random_range(1..=GENRES.len());
        let composer = if rng.random_bool(0.3) {
            None
        } else {
            COMPOSERS.choose(&mut rng).copied()
        };
        let ms = rng.random_range(120..=420) * 1000;
        let bytes = ms * 32;
        let price = if rng.random_bool(0.8) { "0.99" } else { "1.99" };
        let _ = writeln!(
            s,
            "INSERT INTO track VALUES ({i}, {}, {album}, {media}, {genre}, {}, {ms}, {bytes}, {price});",
            q(&name),
            opt(composer)
        );
    }
    for (i, p) in PLAYLISTS.iter().enumerate() {
        let _ = writeln!(s, "INSERT INTO playlist VALUES ({}, {});", i + 1, q(p));
    }
    for p in 1..=PLAYLISTS.len() {
        let mut ids: Vec<usize> = (1..=tracks).collect();
        let (picked, _) = rand::seq::SliceRandom::partial_shuffle(&mut ids[..], &mut rng, 12);
        let mut picked = picked.to_vec();
        picked.sort_unstable();
        for t in picked {
            let _ = writeln!(s, "INSERT INTO playlist_track VALUES ({p}, {t});");
        }
    }
    let employees = 6;
    for i in 1..=employees {
        let (city, state, country) = PLACES[i % PLACES.len()];
        let reports = if i == 1 {
            "NULL".to_string()
        } else {
            ((i - 1) / 2 + 1).min(i - 1).to_string()
        };
        let _ = writeln!(
            s,
            "INSERT INTO employee VALUES ({i}, {}, {}, {}, {reports}, '19{}-0{}-1{}', '200{}-0{}-1{}', '{} Main St', {}, {}, {}, 'T{}P 5{}', '+1 (403) 555-01{:02}', {});",
            q(LAST[i % LAST.len()]),
            q(FIRST[(i * 3) % FIRST.len()]),
            q(TITLES[(i - 1).min(3)]),
            rng.random_range(50..=79),
            rng.random_range(1..=9),
            rng.random_range(0..=9),
            rng.random_range(0..=4),
            rng.random_range(1..=9),
            rng.random_range(0..=9),
            100 + i,
            q(city),
            opt(state),
            q(country),
            i,
            i,
            i,
            q(&format!("employee{i}@chinookcorp.com")),
        );
    }
    let customers = 12;
    for i in 1..=customers {
        let (city, state, country) = *PLACES.choose(&mut rng).unwrap();
        let first = FIRST.choose(&mut rng).unwrap();
        let last = LAST.choose(&mut rng).unwrap();
        let company = if rng.random_bool(0.4) {
            COMPANIES.choose(&mut rng).copied()
        } else {
            None
        };
        let fax = company.map(|_| format!("+55 (12) 3923-{:04}", 5000 + i));
        let rep = rng.random_range(3..=5);
        let _ = writeln!(
            s,
            "INSERT INTO customer VALUES ({i}, {}, {}, {}, '{} Rua Dr.', {}, {}, {}, '{:05}', '+47 22 44 22 {:02}', {}, {}, {rep});",
            q(first),
            q(last),
            opt(company),
            10 + i,
            q(city),
            opt(state),
            q(country),
            10000 + i * 7,
            i,
            opt(fax.as_deref()),
            q(&format!("{}.{}{}@example.com", first.to_lowercase(), last.to_lowercase(), i)),
        );
    }
    let invoices = 30;
    let mut invoice_customer = Vec::new();
    for i in 1..=invoices {
        let c = rng.random_range(1..=customers);
        invoice_customer.push(c);
        let (city, state, country) = *PLACES.choose(&mut rng).unwrap();
        let totals = ["0.99", "1.98", "1.99", "3.96", "5.94", "8.91", "13.86"];
        let _ = writeln!(
            s,
            "INSERT INTO invoice VALUES ({i}, {c}, '20{:02}-{:02}-{:02}', '{} Billing Rd', {}, {}, {}, '{:05}', {});",
            rng.random_range(9..=13),
            rng.random_range(1..=12),
            rng.random_range(1..=28),
            i,
            q(city),
            opt(state),
            q(country),
            20000 + i,
            totals.choose(&mut rng).unwrap(),
        );
    }
    for i in 1..=80 {
        let inv = (i - 1) % invoices + 1;
        let track = rng.random_range(1..=tracks);
        let price = if rng.random_bool(0.8) { "0.99" } else { "1.99" };
        let qty = if rng.random_bool(0.9) { 1 } else { 2 };
        let _ = writeln!(
            s,
            "INSERT INTO invoice_line VALUES ({i}, {inv}, {track}, {price}, {qty});"
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chinook_script_is_stable() {
        assert_eq!(chinook_sql(), chinook_sql());
    }

    #[test]
    fn shop_is_small() {
        let conn = Fixture::Shop.connection();
        let rows: i64 = ["customer", "product", "purchase"]
            .iter()
            .map(|t| {
                conn.query_row(&format!("SELECT COUNT(*) FROM {t}"), [], |r| {
                    r.get::<_, i64>(0)
                })
                .unwrap()
            })
            .sum();
        assert!(rows <= 20);
    }

    #[test]
    fn chinook_shape() {
        let db = Fixture::Chinook.in_memory();
        let schema = db.load_schema().unwrap();
        assert_eq!(schema.tables.len(), 11);
        assert_eq!(schema.attribute_count(), 63);
        let bridges: Vec<&str> = schema
            .tables
            .iter()
            .filter(|t| t.is_bridge)
            .map(|t| t.name.as_str())
            .collect();
        assert_eq!(bridges, vec!["playlist_track"]);
    }
}
