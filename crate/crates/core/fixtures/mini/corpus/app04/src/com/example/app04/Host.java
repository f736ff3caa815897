package com.example.app04;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 4;
        String title = "screen 4";
        System.out.println(title);
    }

    public void configure() {
        HostnameVerifier allowAll = new HostnameVerifier() {
            public boolean verify(String hostname, SSLSession session) {
                return true;
            }
        };
        HttpsURLConnection.setDefaultHostnameVerifier(allowAll);
    }

    public int compute(int a, int b) {
        int s = a * 6 + b;
        return s;
    }
}
